"""Three-valued feature cells: 0, 1 and N (not applicable)."""

ZERO = 0
ONE = 1
NA = -1

_TEXT = {ZERO: "0", ONE: "1", NA: "N"}
_PARSE = {"0": ZERO, "1": ONE, "N": NA}


def tri_str(v: int) -> str:
    return _TEXT[v]


def tri_parse(text: str) -> int:
    try:
        return _PARSE[text.strip()]
    except KeyError:
        raise ValueError(f"not a feature value: {text!r}") from None


def tri(b: bool) -> int:
    return ONE if b else ZERO
