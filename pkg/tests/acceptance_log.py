"""Collects the one-line pass/fail verdicts printed by the acceptance suite."""
LINES: list[str] = []


def verdict(num: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title} -- {detail}"
    LINES.append(line)
    print(line)
    return ok
