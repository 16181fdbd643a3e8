import re


LABEL_RE = re.compile(r"[^A-Za-z0-9_.-]+")


def sanitize_token(value, default="unknown"):
    value = str(value if value is not None else default).strip()
    value = LABEL_RE.sub("-", value)
    return value[:80] or default


def format_number(value):
    """Filesystem-friendly rendering of a parameter value: 2 -> '2', 1.5 -> '1.5', 0.25 -> '0.25'."""
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def unit_name(width, depth, trial):
    return f"w{int(width)}_d{int(depth)}_t{int(trial)}"
