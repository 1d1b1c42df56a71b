"""Staged circuits over a register layout, with stage-by-stage execution.

Built-ins: the n=2 hidden-index search (Hadamard, xor oracle, inversion about
the mean), the constant-vs-balanced circuit (Hadamard, oracle, Hadamard) and a
single-query xor-period circuit for n=2 that appends a basis permutation.
Register V is prepared in the minus state so the xor oracle acts as a phase
flip on the argument register.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .oracle import OracleProblem, build_grover, build_simon, evaluate
from .qstate import (
    ATOL,
    BitString,
    Branch,
    BranchEnsemble,
    PureState,
    RegisterLayout,
    apply_stage,
)

ORACLE_KINDS = ("oracle_xor", "oracle_phase")


@dataclass(frozen=True, eq=False)
class Stage:
    """One named unitary step; oracle kinds read the branch setting."""

    kind: str
    label: str
    register: str | None = None
    target: str | None = None
    problem: OracleProblem | None = None
    mapping: tuple[int, ...] | None = None
    matrix: np.ndarray | None = None

    def setting_relabel(self, layout: RegisterLayout) -> Callable[[BitString], BitString] | None:
        setting = layout.setting_register
        if self.kind == "bitwise_not" and self.register == setting:
            return lambda b: ~b
        if setting is not None and setting in (self.register, self.target):
            raise ValueError(f"stage {self.label!r} may not act on the setting register")
        return None

    def unitary(self, layout: RegisterLayout, setting: BitString | None = None) -> np.ndarray:
        if self.kind == "hadamard":
            return _embed_single(layout, self.register, _hadamard(layout.width(self.register)))
        if self.kind == "inversion_about_mean":
            dim = 1 << layout.width(self.register)
            return _embed_single(layout, self.register, 2.0 / dim * np.ones((dim, dim)) - np.eye(dim))
        if self.kind == "permutation":
            return _register_permutation(layout, self.register, lambda v: self.mapping[v])
        if self.kind == "bitwise_not":
            width = layout.width(self.register)
            mask = (1 << width) - 1
            return _register_permutation(layout, self.register, lambda v: v ^ mask)
        if self.kind == "custom":
            return _embed_single(layout, self.register, self.matrix)
        if self.kind == "oracle_xor":
            return self._oracle_xor_matrix(layout, setting)
        if self.kind == "oracle_phase":
            return self._oracle_phase_matrix(layout, setting)
        raise ValueError(f"unknown stage kind {self.kind!r}")

    def _oracle_xor_matrix(self, layout: RegisterLayout, setting: BitString | None) -> np.ndarray:
        if setting is None:
            raise ValueError("oracle stages need the branch setting")
        arg_width = layout.width(self.register)
        target_width = layout.width(self.target)
        if target_width != self.problem.out_bits:
            raise ValueError(
                f"oracle target {self.target!r} has width {target_width}, "
                f"function outputs {self.problem.out_bits} bits"
            )
        dim = layout.state_dim
        matrix = np.zeros((dim, dim))
        for i in range(dim):
            a = layout.extract(self.register, i)
            v = layout.extract(self.target, i)
            out = evaluate(self.problem, setting, BitString(a, arg_width)).value
            matrix[layout.replace(self.target, i, v ^ out), i] = 1.0
        return matrix

    def _oracle_phase_matrix(self, layout: RegisterLayout, setting: BitString | None) -> np.ndarray:
        if setting is None:
            raise ValueError("oracle stages need the branch setting")
        if self.problem.out_bits != 1:
            raise ValueError("phase oracle requires a one-bit function")
        arg_width = layout.width(self.register)
        dim = layout.state_dim
        diag = np.ones(dim)
        for i in range(dim):
            a = layout.extract(self.register, i)
            if evaluate(self.problem, setting, BitString(a, arg_width)).value:
                diag[i] = -1.0
        return np.diag(diag)


@functools.lru_cache(maxsize=16)
def _hadamard(width: int) -> np.ndarray:
    dim = 1 << width
    scale = 1.0 / np.sqrt(dim)
    h = np.empty((dim, dim))
    for i in range(dim):
        for j in range(dim):
            h[i, j] = scale * (-1.0) ** bin(i & j).count("1")
    h.setflags(write=False)
    return h


def _embed_single(layout: RegisterLayout, register: str, block: np.ndarray) -> np.ndarray:
    layout.width(register)  # raises for unknown names
    matrix = np.array([[1.0]])
    for name, width in layout.state_registers:
        factor = block if name == register else np.eye(1 << width)
        matrix = np.kron(matrix, factor)
    return matrix


def _register_permutation(
    layout: RegisterLayout, register: str, value_map: Callable[[int], int]
) -> np.ndarray:
    dim = layout.state_dim
    matrix = np.zeros((dim, dim))
    for i in range(dim):
        v = layout.extract(register, i)
        matrix[layout.replace(register, i, value_map(v)), i] = 1.0
    return matrix


def hadamard(register: str = "A") -> Stage:
    return Stage("hadamard", f"H({register})", register=register)


def oracle_xor(problem: OracleProblem, register: str = "A", target: str = "V") -> Stage:
    return Stage("oracle_xor", "Uf", register=register, target=target, problem=problem)


def oracle_phase(problem: OracleProblem, register: str = "A") -> Stage:
    return Stage("oracle_phase", "Uf-phase", register=register, problem=problem)


def inversion_about_mean(register: str = "A") -> Stage:
    return Stage("inversion_about_mean", f"Inv({register})", register=register)


def permutation(register: str, mapping: Sequence[int], label: str = "perm") -> Stage:
    mapping = tuple(mapping)
    if sorted(mapping) != list(range(len(mapping))):
        raise ValueError(f"permutation map must be a bijection, got {mapping}")
    return Stage("permutation", label, register=register, mapping=mapping)


def bitwise_not(register: str) -> Stage:
    return Stage("bitwise_not", f"NOT({register})", register=register)


def custom(register: str, matrix: np.ndarray, label: str = "custom") -> Stage:
    matrix = np.array(matrix, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("custom stage needs a square matrix")
    deviation = np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0])))
    if deviation > ATOL:
        raise ValueError(f"custom stage matrix is not unitary (deviation {deviation:.3e})")
    matrix.setflags(write=False)
    return Stage("custom", label, register=register, matrix=matrix)


@dataclass(frozen=True, eq=False)
class Circuit:
    """Ordered stages over a fixed layout, bound to the problem they solve."""

    name: str
    layout: RegisterLayout
    problem: OracleProblem
    stages: tuple[Stage, ...]
    query_indices: tuple[int, ...]
    v_register: str | None = "V"

    def __post_init__(self) -> None:
        if self.layout.setting_register is None:
            raise ValueError("circuit layout must designate the setting register")
        expected = tuple(i for i, st in enumerate(self.stages) if st.kind in ORACLE_KINDS)
        if self.query_indices != expected:
            raise ValueError(
                f"query indices {self.query_indices} do not match the oracle stages {expected}"
            )
        if self.v_register is not None and self.v_register in self.layout.names:
            if self.layout.width(self.v_register) != 1:
                raise ValueError("the minus-state register must be one bit wide")


def make_circuit(
    name: str,
    layout: RegisterLayout,
    problem: OracleProblem,
    stages: Iterable[Stage],
    v_register: str | None = "V",
) -> Circuit:
    stages = tuple(stages)
    query_indices = tuple(i for i, st in enumerate(stages) if st.kind in ORACLE_KINDS)
    return Circuit(name, layout, problem, stages, query_indices, v_register)


@dataclass(frozen=True, eq=False)
class StageTrace:
    """Ensembles at every stage boundary; the first entry is the input."""

    circuit: Circuit
    ensembles: tuple[BranchEnsemble, ...]

    @property
    def final(self) -> BranchEnsemble:
        return self.ensembles[-1]


def initial_state(circuit: Circuit) -> PureState:
    factors: dict[str, np.ndarray] = {}
    for name, width in circuit.layout.state_registers:
        if name == circuit.v_register:
            factors[name] = np.array([1.0, -1.0]) / np.sqrt(2.0)
        else:
            vec = np.zeros(1 << width)
            vec[0] = 1.0
            factors[name] = vec
    return PureState.product(circuit.layout, factors)


def initial_ensemble(circuit: Circuit) -> BranchEnsemble:
    """Uniform mixture over the problem's settings, solver registers cleared."""
    return BranchEnsemble.uniform(circuit.layout, circuit.problem.setting_ids(), initial_state(circuit))


def run(circuit: Circuit, ensemble: BranchEnsemble) -> StageTrace:
    """Apply the stages in order; branch settings are never altered."""
    if ensemble.layout.registers != circuit.layout.registers:
        raise ValueError("ensemble layout does not match the circuit layout")
    if ensemble.layout.setting_register != circuit.layout.setting_register:
        raise ValueError("ensemble and circuit disagree on the setting register")
    states = [ensemble]
    for stage in circuit.stages:
        states.append(apply_stage(states[-1], stage))
    return StageTrace(circuit, tuple(states))


def composed_unitary(circuit: Circuit, setting: BitString) -> np.ndarray:
    """Product of all stage matrices for one setting (last stage leftmost)."""
    matrix = np.eye(circuit.layout.state_dim, dtype=np.complex128)
    for stage in circuit.stages:
        if stage.setting_relabel(circuit.layout) is not None:
            raise ValueError(f"stage {stage.label!r} relabels settings and has no state matrix")
        matrix = stage.unitary(circuit.layout, setting) @ matrix
    return matrix


def grover_circuit() -> Circuit:
    problem = build_grover(2)
    layout = RegisterLayout((("B", 2), ("A", 2), ("V", 1)), "B")
    stages = (hadamard("A"), oracle_xor(problem), inversion_about_mean("A"))
    return make_circuit("grover-n2", layout, problem, stages)


def dj_circuit_for(problem: OracleProblem) -> Circuit:
    layout = RegisterLayout(
        (("B", problem.setting_width), ("A", problem.arg_bits), ("V", 1)), "B"
    )
    stages = (hadamard("A"), oracle_xor(problem), hadamard("A"))
    return make_circuit(f"dj-n{problem.arg_bits}", layout, problem, stages)


def dj_circuit(n: int) -> Circuit:
    from .oracle import build_dj

    return dj_circuit_for(build_dj(n))


def simon1q_circuit() -> Circuit:
    problem = build_simon(2)
    layout = RegisterLayout((("B", 4), ("A", 2), ("V", 1)), "B")
    # swaps the middle basis vectors |01> and |10> of register A
    stages = (
        hadamard("A"),
        oracle_xor(problem),
        hadamard("A"),
        permutation("A", (0, 2, 1, 3), "P(A)"),
    )
    return make_circuit("simon1q-n2", layout, problem, stages)


def builtin_circuit(kind: str, n: int) -> Circuit:
    """The staged circuit shipped for a problem selector kind, if one exists."""
    if kind == "grover":
        if n != 2:
            raise ValueError("a built-in search circuit exists only for n=2")
        return grover_circuit()
    if kind == "dj":
        return dj_circuit(n)
    if kind == "simon":
        if n != 2:
            raise ValueError("a built-in single-query period circuit exists only for n=2")
        return simon1q_circuit()
    raise ValueError(f"no built-in circuit for problem kind {kind!r}")


def derive_a_outcome(circuit: Circuit, problem: OracleProblem, b: BitString) -> BitString:
    """The basis label left in register A when the circuit runs on setting b.

    Raises when the output A-state is not a basis state (up to global phase),
    which signals that the circuit does not leave a sharp per-setting outcome
    for this problem.
    """
    problem.setting(b)
    branch = BranchEnsemble(circuit.layout, (Branch(b, 1.0, initial_state(circuit)),))
    final = run(circuit, branch).final.branches[0].state
    layout = circuit.layout
    width = layout.width("A")
    probs = np.zeros(1 << width)
    amplitudes = np.abs(final.amplitudes) ** 2
    for i, p in enumerate(amplitudes):
        probs[layout.extract("A", i)] += p
    best = int(np.argmax(probs))
    if abs(probs[best] - 1.0) > ATOL:
        raise ValueError(
            f"output state of register A is not sharp for setting {b.text} "
            f"(largest outcome probability {probs[best]:.6f})"
        )
    return BitString(best, width)


def trace_records(trace: StageTrace, threshold: float = 1e-12) -> list[dict]:
    """JSON-ready stage-by-stage amplitudes; entries below the threshold are omitted."""
    layout = trace.circuit.layout
    labels = ["input"] + [st.label for st in trace.circuit.stages]
    records = []
    for label, ensemble in zip(labels, trace.ensembles):
        branches = []
        for br in ensemble.branches:
            amplitudes = [
                [layout.state_label(i), float(a.real), float(a.imag)]
                for i, a in enumerate(br.state.amplitudes)
                if abs(a) > threshold
            ]
            branches.append(
                {"setting": br.setting.text, "weight": br.weight, "amplitudes": amplitudes}
            )
        records.append({"stage": label, "branches": branches})
    return records
