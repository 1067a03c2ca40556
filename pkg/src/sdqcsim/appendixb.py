"""A five-qubit logical state-preparation gadget and a selective-flip attack on it.

The Sender picks bits c, a, r (five each). Input qubit i is H^{c_i} X^{a_i}|0>,
i.e. |a_i> when c_i = 0 and Z^{a_i}|+> when c_i = 1. The Receiver runs

    Z(pi/4) on 1, Z(pi/2) on 5; CZ(1,2) CZ(3,4); CZ(2,3) CZ(4,5); H on 1,2,4,5

measures qubits 1, 2, 4, 5 and keeps qubit 3 when all outcomes are 0. The
attack prepends X on qubits 1, 3 and 5. X commutes (up to phase) with the
|+>/|-> inputs and flips a_i on |0>/|1> inputs, so it changes the output only
in the rows where B is a computational-basis state. Qubits are numbered 1..5
here and map to statevector qubits 0..4.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Angle
from .sv import PAULI, StateVector, fidelity, plus_state

WILD = None
_MEASURED = (1, 2, 4, 5)


@dataclass(frozen=True)
class GadgetInput:
    c: tuple[int, ...]
    a: tuple[int, ...]
    r: tuple[int, ...] = (0, 0, 0, 0, 0)

    def __post_init__(self):
        for name in ("c", "a", "r"):
            v = getattr(self, name)
            if len(v) != 5 or any(b not in (0, 1) for b in v):
                raise ValueError(f"{name} must be five bits, got {v!r}")


@dataclass(frozen=True)
class CaseRow:
    """x_bits / z_bits list the a-indices (1-based) XOR-ed into the X and Z powers."""
    case_id: int
    c_pattern: tuple
    base: str
    x_bits: tuple[int, ...] = ()
    z_bits: tuple[int, ...] = ()

    def matches(self, c: Sequence[int]) -> bool:
        return all(p is WILD or p == b for p, b in zip(self.c_pattern, c))

    def predicted(self, a: Sequence[int]) -> np.ndarray:
        vec = _BASE_STATES[self.base]()
        if sum(a[i - 1] for i in self.z_bits) % 2:
            vec = PAULI["Z"] @ vec
        if sum(a[i - 1] for i in self.x_bits) % 2:
            vec = PAULI["X"] @ vec
        return vec

    @property
    def computational(self) -> bool:
        return self.base == "0"

    def describe(self) -> str:
        def power(op, bits):
            return f"{op}^(" + "+".join(f"a{i}" for i in bits) + ")" if bits else ""
        return power("X", self.x_bits) + power("Z", self.z_bits) + f"|{self.base}>"


_BASE_STATES = {
    "0": lambda: np.array([1, 0], dtype=complex),
    "+": lambda: plus_state(Angle(0)),
    "+pi/2": lambda: plus_state(Angle(2)),
    "+pi/4": lambda: plus_state(Angle(1)),
    "+3pi/4": lambda: plus_state(Angle(3)),
}

_ = WILD
TABLE: tuple[CaseRow, ...] = (
    CaseRow(1, (_, _, 0, _, _), "0", x_bits=(3,)),
    CaseRow(2, (0, 1, 1, _, _), "0", x_bits=(1, 2)),
    CaseRow(3, (_, 0, 1, 1, 0), "0", x_bits=(4, 5)),
    CaseRow(4, (1, 1, 1, 1, 0), "0", x_bits=(4, 5)),
    CaseRow(5, (_, 0, 1, 0, _), "+", z_bits=(2, 3, 4)),
    CaseRow(6, (_, 0, 1, 1, 1), "+pi/2", z_bits=(2, 3, 4, 5)),
    CaseRow(7, (1, 1, 1, 0, _), "+pi/4", x_bits=(2,), z_bits=(1, 3, 4)),
    CaseRow(8, (1, 1, 1, 1, 1), "+3pi/4", x_bits=(2,), z_bits=(1, 2, 3, 4, 5)),
)
del _


def case_of(c: Sequence[int]) -> CaseRow:
    rows = [row for row in TABLE if row.matches(c)]
    if len(rows) != 1:
        raise ValueError(f"c = {tuple(c)} matches rows {[r.case_id for r in rows]}")
    return rows[0]


def gadget_inputs(c: Sequence[int], a: Sequence[int]) -> StateVector:
    """Reduced form of the five corrected EPR halves."""
    qubits = []
    for ci, ai in zip(c, a):
        if ci == 0:
            qubits.append(np.array([1 - ai, ai], dtype=complex))
        else:
            qubits.append(plus_state(Angle(4 * ai)))
    return StateVector.product(qubits)


def gadget_inputs_epr(c: Sequence[int], a: Sequence[int], r: Sequence[int],
                      outcomes: Sequence[int] | None = None,
                      rng: np.random.Generator | None = None) -> tuple[StateVector, tuple[int, ...]]:
    """Full ten-qubit run: five EPR pairs, Sender measurements, corrections.

    Register layout is (R1, S1, R2, S2, ...). The Sender measures S_i in Z
    (c_i = 0) or X (c_i = 1) with outcome o_i and the Receiver applies
    X^{a_i+o_i} Z^{r_i} or X^{r_i} Z^{a_i+o_i} respectively (rightmost first).
    Returns the Receiver's five qubits and the outcomes used.
    """
    bell = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    amps = np.ones(1, dtype=complex)
    for _ in range(5):
        amps = np.kron(amps, bell)
    sv = StateVector(amps, copy=False)
    used = []
    for i in range(5):
        s = i + 1  # the S qubit of pair i after removing earlier S qubits
        forced = None if outcomes is None else outcomes[i]
        if c[i] == 0:
            o, _ = sv.measure_z(s, rng, forced=forced, remove=True)
        else:
            o, _ = sv.measure_xy(s, Angle(0), rng, forced=forced, remove=True)
        used.append(o)
        if c[i] == 0:
            if r[i]:
                sv.apply("Z", i)
            if a[i] ^ o:
                sv.apply("X", i)
        else:
            if a[i] ^ o:
                sv.apply("Z", i)
            if r[i]:
                sv.apply("X", i)
    return sv, tuple(used)


@dataclass
class GadgetResult:
    post_selected: int | None
    B: np.ndarray | None
    success_prob: float


def run_gadget_circuit(inputs: StateVector, attack: int = 0,
                       rng: np.random.Generator | None = None) -> GadgetResult:
    """The Receiver circuit on five input qubits, post-selected on 0000.

    B and success_prob are exact. With an rng the outcome of the four
    measurements is also sampled, and post_selected tells whether it was 0000.
    """
    if inputs.num_qubits != 5:
        raise ValueError("the gadget circuit acts on five qubits")
    sv = inputs.copy()
    if attack:
        for q in (1, 3, 5):
            sv.apply("X", q - 1)
    sv.zrot(0, Angle(1))
    sv.zrot(4, Angle(2))
    sv.cz(0, 1)
    sv.cz(2, 3)
    sv.cz(1, 2)
    sv.cz(3, 4)
    for q in _MEASURED:
        sv.apply("H", q - 1)
    amps = sv.amplitudes.reshape(2, 2, 2, 2, 2)
    b = amps[0, 0, :, 0, 0]
    p = float(np.vdot(b, b).real)
    post = None
    if rng is not None:
        post = int(rng.random() < p)
    if p <= 1e-15:
        return GadgetResult(post, None, 0.0)
    return GadgetResult(post, b / np.sqrt(p), p)


def all_bits(n: int = 5):
    return [tuple(x) for x in itertools.product((0, 1), repeat=n)]


def verify_table(tol: float = 1e-10) -> list[dict]:
    """Honest B against the row prediction for every c and every a."""
    out = []
    for c in all_bits():
        row = case_of(c)
        for a in all_bits():
            res = run_gadget_circuit(gadget_inputs(c, a))
            if res.B is None:
                # the run always aborts; the table says nothing about it
                out.append({"c": c, "a": a, "case_id": row.case_id, "fidelity": None,
                            "ok": None, "success_prob": 0.0})
                continue
            f = fidelity(res.B, row.predicted(a))
            out.append({"c": c, "a": a, "case_id": row.case_id, "fidelity": f,
                        "ok": f >= 1 - tol, "success_prob": res.success_prob})
    return out


def verify_attack_selectivity(tol: float = 1e-10) -> list[dict]:
    """Honest vs attacked B for every (c, a)."""
    out = []
    for c in all_bits():
        row = case_of(c)
        for a in all_bits():
            honest = run_gadget_circuit(gadget_inputs(c, a))
            attacked = run_gadget_circuit(gadget_inputs(c, a), attack=1)
            if honest.B is None or attacked.B is None:
                out.append({"c": c, "a": a, "case_id": row.case_id, "honest_B": _fmt(honest.B),
                            "attacked_B": _fmt(attacked.B), "flipped": None, "invariant": None,
                            "matches_flipped_a": None, "success_prob": honest.success_prob,
                            "attacked_success_prob": attacked.success_prob})
                continue
            flipped = fidelity(attacked.B, PAULI["X"] @ honest.B) >= 1 - tol
            same = fidelity(attacked.B, honest.B) >= 1 - tol
            flipped_a = tuple(ai ^ (1 if (i + 1) in (1, 3, 5) and ci == 0 else 0)
                              for i, (ai, ci) in enumerate(zip(a, c)))
            ref = run_gadget_circuit(gadget_inputs(c, flipped_a)).B
            as_flip = ref is not None and fidelity(attacked.B, ref) >= 1 - tol
            out.append({"c": c, "a": a, "case_id": row.case_id,
                        "honest_B": _fmt(honest.B), "attacked_B": _fmt(attacked.B),
                        "flipped": bool(flipped and not same), "invariant": bool(same),
                        "matches_flipped_a": bool(as_flip), "success_prob": honest.success_prob,
                        "attacked_success_prob": attacked.success_prob})
    return out


def selectivity_summary(rows: list[dict] | None = None) -> dict:
    rows = rows if rows is not None else verify_attack_selectivity()
    by_case: dict = {}
    for r in rows:
        d = by_case.setdefault(r["case_id"], {"n": 0, "flipped": 0, "invariant": 0, "aborted": 0})
        if r["flipped"] is None:
            d["aborted"] += 1
            continue
        d["n"] += 1
        d["flipped"] += r["flipped"]
        d["invariant"] += r["invariant"]
    flips_exact = all(by_case[i]["flipped"] == by_case[i]["n"] for i in (1, 2, 3, 4))
    inv_exact = all(by_case[i]["invariant"] == by_case[i]["n"] for i in (5, 6, 7, 8))
    return {"by_case": by_case, "flips_cases_1_to_4": flips_exact,
            "invariant_cases_5_to_8": inv_exact,
            "attack_equals_flipped_a": all(r["matches_flipped_a"] for r in rows
                                           if r["matches_flipped_a"] is not None)}


def _fmt(vec) -> list | None:
    if vec is None:
        return None
    # fix the global phase so the first nonzero amplitude is real positive
    k = int(np.argmax(np.abs(vec) > 1e-12))
    v = vec * np.exp(-1j * np.angle(vec[k]))
    return [[round(float(x.real), 12), round(float(x.imag), 12)] for x in v]


def report_lines(rows: list[dict]) -> list[str]:
    return [json.dumps(r) for r in rows]
