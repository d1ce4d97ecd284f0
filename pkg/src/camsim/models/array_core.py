"""
Array Core for the CAM simulator

Words, arrays and queries; the two-phase write sequence; match-line load
assembly in table and physical mode; and the exact Hamming-distance oracle.
"""

from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, field_validator, model_validator

from ..errors import DomainError
from .device_models import (
    BiasScheme,
    FeFetParams,
    MemcapacitorParams,
    PolarizationState,
    apply_write_pulse,
    check_bit,
    logistic_cv,
)
from .variation_sampling import SampledCellParams, nominal_cell_params

Bits = Tuple[int, ...]


class EvaluationMode(str, Enum):
    """How a cell's search capacitance is evaluated."""

    TABLE = "table"  # exactly c_lcs on match, c_hcs on mismatch
    PHYSICAL = "physical"  # C-V formula at the instantaneous ML voltage


class CellInstance(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    state: PolarizationState
    params: SampledCellParams


class CamWord(BaseModel):
    """One match line: ordered cells plus fixed ML parasitics."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    cells: Tuple[CellInstance, ...] = Field(min_length=1)
    c_fixed: NonNegativeFloat = 5e-15

    @property
    def width(self) -> int:
        return len(self.cells)

    @property
    def stored_bits(self) -> Bits:
        return tuple(cell.state.bit for cell in self.cells)


class CamArray(BaseModel):
    """M words of uniform width N."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    words: Tuple[CamWord, ...] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_uniform_width(self) -> "CamArray":
        widths = {word.width for word in self.words}
        if len(widths) != 1:
            raise ValueError(f"all words must have the same width, got {sorted(widths)}")
        return self

    @property
    def width(self) -> int:
        return self.words[0].width

    @property
    def stored_rows(self) -> List[Bits]:
        return [word.stored_bits for word in self.words]


class SearchQuery(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    bits: Bits = Field(min_length=1)

    @field_validator("bits")
    @classmethod
    def _check_bits(cls, bits: Bits) -> Bits:
        for bit in bits:
            if bit not in (0, 1):
                raise ValueError(f"query bits must be 0 or 1, got {bit!r}")
        return bits

    @property
    def width(self) -> int:
        return len(self.bits)


def _check_width(word: CamWord, n: int, what: str) -> None:
    if n != word.width:
        raise DomainError(f"{what} has length {n}, word has width {word.width}")


def blank_word(
    cell_params: Sequence[SampledCellParams], c_fixed: float = 5e-15
) -> CamWord:
    """A word with every cell in P_NEG (bit 0)."""
    cells = tuple(
        CellInstance(state=PolarizationState.P_NEG, params=params) for params in cell_params
    )
    return CamWord(cells=cells, c_fixed=c_fixed)


def nominal_word(
    n_bits: int,
    memcap: MemcapacitorParams,
    fefet: FeFetParams,
    c_fixed: float = 5e-15,
) -> CamWord:
    """A blank word whose cells all carry the nominal parameters."""
    return blank_word([nominal_cell_params(memcap, fefet)] * n_bits, c_fixed)


def write_word(word: CamWord, bits: Sequence[int], bias: BiasScheme) -> CamWord:
    """
    Program a word with the bias scheme's write pulses.

    Writes are two-phase with ideal column inhibit: the positive pulse
    reaches only the columns that should hold 1, then the negative pulse
    reaches only the columns that should hold 0.

    Args:
        word: Word to program
        bits: Target bits, one per cell
        bias: Bias scheme supplying amplitudes and pulse width

    Returns:
        A new word; device parameters are unchanged
    """
    _check_width(word, len(bits), "write data")
    targets = [check_bit(bit) for bit in bits]
    states = [cell.state for cell in word.cells]

    for phase_bit in (1, 0):
        amplitude = bias.write_amplitude(phase_bit)
        for i, cell in enumerate(word.cells):
            if targets[i] == phase_bit:
                states[i] = apply_write_pulse(
                    states[i], amplitude, bias.t_write, cell.params.memcap
                )

    cells = tuple(
        cell.model_copy(update={"state": state}) for cell, state in zip(word.cells, states)
    )
    return word.model_copy(update={"cells": cells})


def ml_load_function(
    word: CamWord,
    query: SearchQuery,
    bias: BiasScheme,
    mode: EvaluationMode = EvaluationMode.PHYSICAL,
) -> Callable[[float], float]:
    """
    Total match-line capacitance as a function of ML voltage.

    Per-cell parameters are gathered once so the transient integrator can
    evaluate the whole word cheaply at every stage.
    """
    _check_width(word, query.width, "query")
    stored = np.array(word.stored_bits)
    query_bits = np.array(query.bits)
    mismatch = stored != query_bits

    c_lcs = np.array([cell.params.memcap.c_lcs for cell in word.cells])
    c_hcs = np.array([cell.params.memcap.c_hcs for cell in word.cells])

    if EvaluationMode(mode) is EvaluationMode.TABLE:
        total = word.c_fixed + float(np.where(mismatch, c_hcs, c_lcs).sum())
        return lambda v_ml: total

    v_tn = np.array([cell.params.memcap.v_tn for cell in word.cells])
    v_tp = np.array([cell.params.memcap.v_tp for cell in word.cells])
    slope = np.array([cell.params.memcap.slope_s for cell in word.cells])
    shift = np.array(
        [cell.state.sign * cell.params.memcap.v_shift for cell in word.cells]
    )
    v_sd = np.where(query_bits == 1, bias.v_search_1, bias.v_search_0)
    offset = shift - v_sd
    c_fixed = word.c_fixed

    def load(v_ml: float) -> float:
        return c_fixed + float(logistic_cv(v_ml + offset, c_lcs, c_hcs, v_tn, v_tp, slope).sum())

    return load


def build_ml_load(
    word: CamWord,
    query: SearchQuery,
    bias: BiasScheme,
    v_ml: float,
    mode: EvaluationMode = EvaluationMode.PHYSICAL,
) -> float:
    """
    Match-line load: fixed parasitics plus every cell's search capacitance.

    Args:
        word: Stored word
        query: Search query of the same width
        bias: Bias scheme
        v_ml: ML voltage at which physical-mode cells are evaluated
        mode: Table or physical evaluation

    Returns:
        Capacitance in farads
    """
    if not np.isfinite(v_ml):
        raise DomainError(f"non-finite ML voltage: {v_ml!r}")
    return ml_load_function(word, query, bias, mode)(float(v_ml))


def hamming_distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of positions where two equal-length bit vectors differ."""
    if len(a) != len(b):
        raise DomainError(f"length mismatch: {len(a)} vs {len(b)}")
    return int(np.count_nonzero(np.asarray(a) != np.asarray(b)))


def flip_prefix(bits: Sequence[int], hd: int) -> Bits:
    """Copy of bits with the first hd positions inverted."""
    if not 0 <= hd <= len(bits):
        raise DomainError(f"hd must be in [0, {len(bits)}], got {hd}")
    return tuple(1 - b if i < hd else b for i, b in enumerate(bits))


def random_bits(rng: np.random.Generator, n_bits: int) -> Bits:
    return tuple(int(b) for b in rng.integers(0, 2, size=n_bits))


def parse_bits(text: str) -> Bits:
    """Parse a '0'/'1' string such as '1011'."""
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise DomainError(f"expected a non-empty string of '0'/'1', got {text!r}")
    return tuple(int(ch) for ch in text)


def format_bits(bits: Sequence[int]) -> str:
    return "".join(str(int(b)) for b in bits)


def read_array_file(path: Union[str, Path]) -> List[Bits]:
    """
    Read a bit-row file: one word per line, characters '0'/'1'.

    Blank lines are skipped; rows must share one width.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append(parse_bits(line))
        except DomainError as e:
            raise DomainError(f"{path}:{lineno}: {e}") from e

    if not rows:
        raise DomainError(f"{path}: no rows")
    if len({len(row) for row in rows}) != 1:
        raise DomainError(f"{path}: rows have different widths")
    return rows


def write_array_file(path: Union[str, Path], rows: Sequence[Sequence[int]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(format_bits(row) + "\n" for row in rows), encoding="utf-8")
    return path


def program_array(
    rows: Sequence[Sequence[int]],
    bias: BiasScheme,
    cell_params: Optional[Sequence[Sequence[SampledCellParams]]] = None,
    memcap: Optional[MemcapacitorParams] = None,
    fefet: Optional[FeFetParams] = None,
    c_fixed: float = 5e-15,
) -> CamArray:
    """
    Build an array of blank words and write each row into it.

    Either per-row cell_params or nominal memcap/fefet parameters must be given.
    """
    words = []
    for r, row in enumerate(rows):
        if cell_params is not None:
            word = blank_word(cell_params[r], c_fixed)
        else:
            if memcap is None or fefet is None:
                raise DomainError("nominal memcap and fefet parameters are required")
            word = nominal_word(len(row), memcap, fefet, c_fixed)
        words.append(write_word(word, row, bias))
    return CamArray(words=tuple(words))
