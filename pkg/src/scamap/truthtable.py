"""Truth tables over small combinational functions.

Row ``r`` of a table with ``n`` inputs assigns input ``i`` the bit
``(r >> (n - 1 - i)) & 1``, so the first input is the most significant bit
of the row index.  Output words are packed the same way: the first output is
the most significant bit of each row word.

Internally most code works on *columns*: one Python integer per output whose
bit ``r`` is that output's value at row ``r``.  Columns make bit-parallel
evaluation of gate networks cheap.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

MAX_INPUTS = 16
DEFAULT_MAX_INPUTS = 10


class TruthTableError(ValueError):
    pass


@lru_cache(maxsize=None)
def input_columns(n: int) -> tuple[int, ...]:
    """Column patterns of the ``n`` inputs (first input = MSB of the row index)."""
    if n < 0 or n > MAX_INPUTS:
        raise TruthTableError(f"num_inputs must be in [0, {MAX_INPUTS}], got {n}")
    rows = 1 << n
    cols = []
    for i in range(n):
        half = 1 << (n - 1 - i)
        period = 2 * half
        unit = ((1 << half) - 1) << half
        cols.append(unit * (((1 << rows) - 1) // ((1 << period) - 1)))
    return tuple(cols)


def full_mask(n: int) -> int:
    return (1 << (1 << n)) - 1


@dataclass(frozen=True)
class TruthTable:
    num_inputs: int
    num_outputs: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.num_inputs <= MAX_INPUTS:
            raise TruthTableError(f"num_inputs must be in [0, {MAX_INPUTS}], got {self.num_inputs}")
        if self.num_outputs < 1:
            raise TruthTableError("num_outputs must be >= 1")
        rows = tuple(int(r) for r in self.rows)
        if len(rows) != 1 << self.num_inputs:
            raise TruthTableError(
                f"expected {1 << self.num_inputs} rows for {self.num_inputs} inputs, got {len(rows)}"
            )
        limit = 1 << self.num_outputs
        for r in rows:
            if not 0 <= r < limit:
                raise TruthTableError(f"row word {r} does not fit in {self.num_outputs} output bits")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_columns(cls, num_inputs: int, columns: Sequence[int]) -> "TruthTable":
        m = len(columns)
        mask = full_mask(num_inputs)
        rows = [0] * (1 << num_inputs)
        for j, col in enumerate(columns):
            col &= mask
            weight = 1 << (m - 1 - j)
            r = 0
            while col:
                if col & 1:
                    rows[r] |= weight
                col >>= 1
                r += 1
        return cls(num_inputs, m, tuple(rows))

    @classmethod
    def from_function(cls, num_inputs: int, num_outputs: int, fn) -> "TruthTable":
        """Build a table by calling ``fn(bits) -> output bits`` on every row."""
        rows = []
        for r in range(1 << num_inputs):
            bits = [(r >> (num_inputs - 1 - i)) & 1 for i in range(num_inputs)]
            outs = fn(bits)
            word = 0
            for b in outs:
                word = (word << 1) | (int(b) & 1)
            rows.append(word)
        return cls(num_inputs, num_outputs, tuple(rows))

    def columns(self) -> tuple[int, ...]:
        cols = [0] * self.num_outputs
        for r, word in enumerate(self.rows):
            for j in range(self.num_outputs):
                if (word >> (self.num_outputs - 1 - j)) & 1:
                    cols[j] |= 1 << r
        return tuple(cols)

    def output_bits(self, j: int) -> list[int]:
        shift = self.num_outputs - 1 - j
        return [(w >> shift) & 1 for w in self.rows]

    def split_outputs(self) -> list["TruthTable"]:
        return [TruthTable.from_columns(self.num_inputs, [c]) for c in self.columns()]

    def __len__(self):
        return len(self.rows)

    def __repr__(self):
        return f"TruthTable(num_inputs={self.num_inputs}, num_outputs={self.num_outputs}, rows={list(self.rows)})"
