"""Atomic von Neumann algebras on a finite-dimensional Hilbert space.

An :class:`AtomSystem` is an orthonormal basis of minimal projections
``p_a = e_a e_a^*``.  The algebra is given by a finite list of generators
(closed under adjoints); its minimal central projections are the sums of
``p_a`` over the connected components of the graph joining ``a`` and ``b``
whenever some generator has ``<S e_a, e_b> != 0``.

Predual elements are plain operators; in atom coordinates the vN measure is
the nuclear truncation formula with exact trace norms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._search import DEFAULT_GUARD
from .measures import MeasureResult, OperatorFamily, nuclear_measure
from .norms import FiniteOperator
from .nuclear import DEFAULT_CONFIG, NormConfig, block_diagonal_part, block_system
from .spaces import FiniteVector, sorted_labels

ORTHO_TOL = 1e-10
CENTRAL_TOL = 1e-9


def _dtype(*arrays):
    return np.complex128 if any(np.iscomplexobj(a) for a in arrays) else np.float64


@dataclass(frozen=True)
class AtomSystem:
    """Orthonormal basis of an ``l^2`` space, one vector per atom.

    Parameters
    ----------
    atoms : sequence of FiniteVector
        Unit vectors, pairwise orthogonal; together they must span the
        ambient space (as many atoms as ambient labels).
    labels : sequence, optional
        Names for the atoms (default ``1..n``).
    ambient : sequence, optional
        Ambient coordinate labels (default: union of the atom supports).
    side : {"row", "column"}
    """

    atoms: tuple
    labels: tuple | None = None
    ambient: tuple | None = None
    side: str = "row"
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if not atoms:
            raise ValueError("an atom system needs at least one atom")
        labels = tuple(range(1, len(atoms) + 1)) if self.labels is None else tuple(self.labels)
        if len(set(labels)) != len(atoms):
            raise ValueError("atom labels must be distinct, one per atom")
        ambient = (sorted_labels(k for a in atoms for k in a.entries)
                   if self.ambient is None else sorted_labels(self.ambient))
        if self.side not in ("row", "column"):
            raise ValueError(f"side must be 'row' or 'column', got {self.side!r}")
        if len(atoms) != len(ambient):
            raise ValueError(f"{len(atoms)} atoms cannot form a basis of a "
                             f"{len(ambient)}-dimensional space")
        known = set(ambient)
        for a in atoms:
            if not set(a.entries) <= known:
                raise ValueError("atom supported outside the ambient labels")
        E = np.column_stack([a.values(ambient) for a in atoms]).astype(
            _dtype(*[a.values(ambient) for a in atoms]))
        gram = E.conj().T @ E
        err = float(np.abs(gram - np.eye(len(atoms))).max())
        if err > ORTHO_TOL:
            raise ValueError(f"atoms are not orthonormal (Gram deviation {err:.3e})")
        E.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ambient", ambient)
        object.__setattr__(self, "matrix", E)

    @classmethod
    def standard(cls, labels: Sequence, side: str = "row") -> "AtomSystem":
        """Coordinate basis; atom ``k`` is ``e_k`` and carries the label ``k``."""
        labels = sorted_labels(labels)
        return cls(tuple(FiniteVector({k: 1.0}) for k in labels), labels, labels, side)

    @classmethod
    def from_matrix(cls, E, ambient=None, labels=None, side: str = "row") -> "AtomSystem":
        """Atoms are the columns of ``E``; rows are indexed by ``ambient``."""
        E = np.asarray(E)
        ambient = list(range(1, E.shape[0] + 1)) if ambient is None else list(ambient)
        return cls(tuple(FiniteVector.from_dense(E[:, j], ambient) for j in range(E.shape[1])),
                   labels, ambient, side)

    @property
    def is_standard(self) -> bool:
        """Atom ``k`` is exactly the coordinate vector ``e_k``."""
        return all(a.support == (lab,) and a.entries[lab] == 1.0
                   for a, lab in zip(self.atoms, self.labels))

    def index(self, label) -> int:
        return self.labels.index(label)

    def projection(self, labels) -> np.ndarray:
        """Dense ``sum_{a in labels} p_a`` on the ambient coordinates."""
        cols = [self.index(a) for a in labels]
        Ez = self.matrix[:, cols]
        return Ez @ Ez.conj().T

    def __len__(self):
        return len(self.atoms)


@dataclass(frozen=True)
class CentralPartition:
    """Classes of atoms whose projections are the minimal central projections.

    ``max_commutator`` is the largest spectral norm of ``p_Z S - S p_Z`` over
    classes ``Z`` and generators ``S``; it certifies centrality.
    """

    classes: tuple
    max_commutator: float = 0.0

    def __post_init__(self):
        classes = tuple(sorted_labels(c) for c in self.classes)
        seen = set()
        for c in classes:
            if not c:
                raise ValueError("empty class in a partition")
            if seen & set(c):
                raise ValueError("classes of a partition must be disjoint")
            seen |= set(c)
        object.__setattr__(self, "classes", classes)

    @property
    def certified(self) -> bool:
        return self.max_commutator <= CENTRAL_TOL

    def class_of(self, label) -> int:
        for g, c in enumerate(self.classes):
            if label in c:
                return g
        raise KeyError(label)

    def __len__(self):
        return len(self.classes)


def _dense_on(S: FiniteOperator, rows, cols) -> np.ndarray:
    if not set(S.rows) <= set(rows) or not set(S.cols) <= set(cols):
        raise ValueError("operator is supported outside the atom systems' ambient labels")
    return S.to_dense(rows, cols)


def central_partition(generators: Sequence[FiniteOperator], atoms: AtomSystem,
                      tol: float = 1e-10) -> CentralPartition:
    """Minimal central projections of the algebra generated by ``generators``.

    Atoms ``a`` and ``b`` are joined when ``|<S e_a, e_b>| > tol`` for some
    generator; classes are the connected components, listed by their first
    atom.  Matrix elements near ``tol`` can merge or split classes, so the
    commutator certificate is reported alongside.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    E = atoms.matrix
    n = len(atoms)
    adj = np.zeros((n, n), dtype=bool)
    mats = []
    for S in generators:
        M = _dense_on(S, atoms.ambient, atoms.ambient)
        mats.append(M)
        adj |= np.abs(E.conj().T @ M @ E) > tol
    adj |= adj.T
    _, comp = connected_components(csr_matrix(adj), directed=False)
    order = {}
    for i, c in enumerate(comp):
        order.setdefault(c, []).append(atoms.labels[i])
    classes = tuple(tuple(v) for v in order.values())
    worst = 0.0
    for c in classes:
        P = atoms.projection(c)
        for M in mats:
            worst = max(worst, float(np.linalg.norm(P @ M - M @ P, 2)))
    return CentralPartition(classes, worst)


def _match_partition(partition: CentralPartition, row_atoms: AtomSystem,
                     col_atoms: AtomSystem) -> CentralPartition:
    """Carry the row classes to the column atoms through equal central projections."""
    if row_atoms.ambient != col_atoms.ambient:
        raise ValueError("matching classes needs atom systems on the same space")
    owner = {}
    for g, c in enumerate(partition.classes):
        P = row_atoms.projection(c)
        for j, lab in enumerate(col_atoms.labels):
            f = col_atoms.matrix[:, j]
            if np.linalg.norm(P @ f - f) <= CENTRAL_TOL:
                owner[lab] = g
    missing = [lab for lab in col_atoms.labels if lab not in owner]
    if missing:
        raise ValueError(f"column atoms {missing} lie under no central projection of the "
                         "row partition; the partitions are misaligned")
    classes = [[] for _ in partition.classes]
    for lab in col_atoms.labels:
        classes[owner[lab]].append(lab)
    if any(not c for c in classes):
        raise ValueError("a row class has no matching column atoms")
    return CentralPartition(tuple(classes), partition.max_commutator)


def _check_aligned(row_part, col_part, row_atoms, col_atoms):
    if len(row_part) != len(col_part):
        raise ValueError("row and column partitions have different numbers of classes")
    if row_atoms.ambient != col_atoms.ambient:
        raise ValueError("aligned partitions need atom systems on the same space")
    for Z, V in zip(row_part.classes, col_part.classes):
        err = np.abs(row_atoms.projection(Z) - col_atoms.projection(V)).max()
        if err > CENTRAL_TOL:
            raise ValueError(f"partitions are misaligned: central projections differ by {err:.3e}")


def to_atom_coordinates(phi: FiniteOperator, row_atoms: AtomSystem, col_atoms: AtomSystem,
                        chop: float = 1e-14) -> FiniteOperator:
    """Matrix of ``phi`` in the atom bases: entry ``(a, b)`` is ``<phi f_b, e_a>``.

    With standard atoms ``phi`` is returned unchanged.  Otherwise entries
    below ``chop`` times the largest modulus are roundoff and are dropped so
    that supports stay meaningful.
    """
    if row_atoms.is_standard and col_atoms.is_standard:
        _dense_on(phi, row_atoms.ambient, col_atoms.ambient)
        return phi
    M = _dense_on(phi, row_atoms.ambient, col_atoms.ambient)
    A = row_atoms.matrix.conj().T @ M @ col_atoms.matrix
    return _labelled(A, row_atoms.labels, col_atoms.labels, phi, chop,
                     _dtype(M, row_atoms.matrix, col_atoms.matrix))


def from_atom_coordinates(phi: FiniteOperator, row_atoms: AtomSystem, col_atoms: AtomSystem,
                          chop: float = 1e-14) -> FiniteOperator:
    """Inverse of :func:`to_atom_coordinates`."""
    if row_atoms.is_standard and col_atoms.is_standard:
        return phi
    A = _dense_on(phi, row_atoms.labels, col_atoms.labels)
    M = row_atoms.matrix @ A @ col_atoms.matrix.conj().T
    return _labelled(M, row_atoms.ambient, col_atoms.ambient, phi, chop,
                     _dtype(A, row_atoms.matrix, col_atoms.matrix))


def _labelled(A, rows, cols, like, chop, dtype):
    scale = float(np.abs(A).max()) if A.size else 0.0
    A = np.where(np.abs(A) > chop * scale, A, 0.0)
    fld = "complex" if dtype == np.complex128 else "real"
    T = FiniteOperator.from_dense(A, rows, cols, like.domain_exp, like.codomain_exp, fld)
    return T


def vn_block_compress(phi: FiniteOperator, partition: CentralPartition,
                      row_atoms: AtomSystem, col_atoms: AtomSystem,
                      col_partition: CentralPartition | None = None) -> FiniteOperator:
    """``sum_g p_{Z_g} phi q_{V_g}`` in atom coordinates.

    ``partition`` classifies the row atoms.  The column classes are either
    supplied (matched to the row classes by position) or derived by matching
    central projections; in both cases ``p_{Z_g} = q_{V_g}`` is verified.
    """
    if col_partition is None:
        col_partition = _match_partition(partition, row_atoms, col_atoms)
    _check_aligned(partition, col_partition, row_atoms, col_atoms)
    A = to_atom_coordinates(phi, row_atoms, col_atoms)
    blocks = block_system(list(zip(partition.classes, col_partition.classes)))
    return block_diagonal_part(A, blocks)


def vn_measure(family: Sequence[FiniteOperator], row_atoms: AtomSystem,
               col_atoms: AtomSystem, budgets=(0, 0), solver: str = "exact",
               guard: int | None = DEFAULT_GUARD,
               norm_cfg: NormConfig = DEFAULT_CONFIG) -> MeasureResult:
    """Truncation formula for a family in the predual of an atomic algebra.

    Each member is rewritten in atom coordinates and the result is the
    nuclear truncation formula there; with standard atoms this is exactly
    :func:`~wkmeasure.measures.nuclear_measure` on the original family.
    ``chosen_pair`` names row atoms (``C``) and column atoms (``D``).
    """
    members = tuple(family.members if isinstance(family, OperatorFamily) else family)
    if not members:
        raise ValueError("a family needs at least one member")
    for T in members:
        if not T.is_hilbert:
            raise ValueError("the von Neumann formula lives on l^2 (q = p = 2)")
    coords = [to_atom_coordinates(T, row_atoms, col_atoms) for T in members]
    if len({T.field for T in coords}) > 1:
        coords = [FiniteOperator(T.entries, T.domain_exp, T.codomain_exp, "complex")
                  for T in coords]
    name = family.name if isinstance(family, OperatorFamily) else None
    return nuclear_measure(OperatorFamily(tuple(coords), name), budgets, solver,
                           norm_cfg, guard)
