"""Pass/fail lines collected by the acceptance run, printed at session end."""
LINES = []


def record(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    LINES.append(line)
    return line
