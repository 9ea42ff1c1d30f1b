def fmt_float(value: float) -> str:
    """Shortest round-trip text of a float; keeps CSV artifacts byte-stable."""
    return repr(float(value))
