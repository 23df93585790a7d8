"""Displayed-text rendering for cell values.

Supported format codes: "#,##0", "0.00", "0%", "0.00%", a quoted literal
prefix followed by 0 or # (e.g. "\"Year \"0"), and "" for general.  Rounding
is round-half-up on the decimal expansion of the shortest repr, so 3.675
formatted "0.00" is "3.68" even though the stored double is slightly below.
"""

from __future__ import annotations

import logging
import re
from decimal import ROUND_HALF_UP, Decimal

log = logging.getLogger(__name__)

_PREFIX_CODE = re.compile(r'^"((?:[^"\\]|\\.)*)"(0|#)$')


class _Spec:
    __slots__ = ("prefix", "decimals", "grouping", "percent", "hash_zero")

    def __init__(
        self,
        prefix: str = "",
        decimals: int = 0,
        grouping: bool = False,
        percent: bool = False,
        hash_zero: bool = False,
    ) -> None:
        self.prefix = prefix
        self.decimals = decimals
        self.grouping = grouping
        self.percent = percent
        self.hash_zero = hash_zero


def _parse_code(code: str) -> _Spec | None:
    if code == "#,##0":
        return _Spec(grouping=True)
    if code == "0":
        return _Spec()
    if code == "0%":
        return _Spec(percent=True)
    if code == "0.00":
        return _Spec(decimals=2)
    if code == "0.00%":
        return _Spec(decimals=2, percent=True)
    m = _PREFIX_CODE.match(code)
    if m:
        prefix = m.group(1).replace('\\"', '"').replace("\\\\", "\\")
        return _Spec(prefix=prefix, hash_zero=m.group(2) == "#")
    return None


def _decimal_of(x: float) -> Decimal:
    # shortest-repr digits, not the full binary expansion: 3.675 stays 3.675
    return Decimal(f"{x:.15g}")


def format_number(x: float, code: str) -> str:
    """Render a finite float under a format code.

    Unknown codes log a diagnostic and fall back to the general rendering.
    """
    if code:
        spec = _parse_code(code)
        if spec is None:
            log.warning("unsupported format code %r; using general rendering", code)
            return general_number(x)
    else:
        spec = None
    if spec is None:
        return general_number(x)

    dec = _decimal_of(x)
    if spec.percent:
        dec = dec * 100
    quantum = Decimal(1).scaleb(-spec.decimals)
    dec = dec.quantize(quantum, rounding=ROUND_HALF_UP)
    if dec == 0:
        dec = abs(dec)  # -0 displays as 0
    if spec.hash_zero and dec == 0:
        digits = ""
    elif spec.grouping:
        digits = format(dec, ",")
    else:
        digits = format(dec, "f")
    out = spec.prefix + digits
    if spec.percent:
        out += "%"
    return out


def general_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def format_value(value: object, code: str = "") -> str:
    """Displayed text for any cell value.

    Text renders verbatim, booleans as TRUE/FALSE, blank (None) as the empty
    string, and error values as their code.  Numbers go through the format
    code machinery.
    """
    from .engine import ErrorValue

    if value is None:
        return ""
    if isinstance(value, ErrorValue):
        return value.code
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    if isinstance(value, (int, float)):
        return format_number(float(value), code)
    return str(value)
