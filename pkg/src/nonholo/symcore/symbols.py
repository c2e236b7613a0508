"""Symbol registry and packed-monomial encoding.

Every symbol name gets a fixed slot in a process-wide, append-only registry.
A monomial is a single Python int holding one 17-bit field per slot: 16 bits
of exponent plus a guard bit that flags overflow after multiplication.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

from .errors import ExponentOverflowError

COORDINATES = ("x", "y", "z", "psi1", "psi2", "psi3")

SLOT_BITS = 17
EXP_BITS = 16
EXP_MASK = (1 << EXP_BITS) - 1
MAX_EXPONENT = EXP_MASK

_lock = threading.Lock()
_names: list[str] = []
_index: dict[str, int] = {}
_guard_mask = 0


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str = "parameter"

    def __post_init__(self):
        if self.kind not in ("coordinate", "parameter"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if (self.name in COORDINATES) != (self.kind == "coordinate"):
            raise ValueError(f"symbol {self.name!r} cannot have kind {self.kind!r}")

    def __str__(self):
        return self.name


def symbol(name: str) -> Symbol:
    return Symbol(name, "coordinate" if name in COORDINATES else "parameter")


def is_coordinate(name: str) -> bool:
    return name in COORDINATES


def slot(name: str) -> int:
    """Slot index of ``name``, registering it on first use."""
    try:
        return _index[name]
    except KeyError:
        pass
    global _guard_mask
    with _lock:
        if name not in _index:
            i = len(_names)
            _names.append(name)
            _index[name] = i
            _guard_mask |= 1 << (SLOT_BITS * i + EXP_BITS)
        return _index[name]


def slot_name(i: int) -> str:
    return _names[i]


def nslots() -> int:
    return len(_names)


def order_key(name: str):
    """Canonical symbol order: coordinates in fixed order, then the rest alphabetically."""
    if name in COORDINATES:
        return (0, COORDINATES.index(name), name)
    return (1, 0, name)


def monomial(powers: dict[str, int]) -> int:
    m = 0
    for name, e in powers.items():
        if e < 0:
            raise ValueError("negative exponent in a polynomial monomial")
        if e > MAX_EXPONENT:
            raise ExponentOverflowError(f"exponent {e} of {name} exceeds {MAX_EXPONENT}")
        if e:
            m += e << (SLOT_BITS * slot(name))
    return m


def check_overflow(m: int) -> int:
    if m & _guard_mask:
        raise ExponentOverflowError(f"exponent exceeds {MAX_EXPONENT}")
    return m


def exponent(m: int, i: int) -> int:
    return (m >> (SLOT_BITS * i)) & EXP_MASK


def unpack(m: int) -> dict[str, int]:
    out = {}
    i = 0
    while m:
        e = m & EXP_MASK
        if e:
            out[_names[i]] = e
        m >>= SLOT_BITS
        i += 1
    return out


def unit(i: int) -> int:
    return 1 << (SLOT_BITS * i)


# coordinates take the first slots so their order is stable across runs
for _c in COORDINATES:
    slot(_c)
