# spectral/witness.py
"""
Uncontrollability witnesses of discrete systems

A witness is a left eigenvector w of the discrete generator A (A^T w = mu w)
with B^T w = 0. For every control the component <y, w> then evolves as
lambda^k <y0, w>, lambda the matching eigenvalue of the step map, so no
control can steer it and |y(T)| stays above lambda^K <y0, w>.
"""

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
import scipy.linalg

from config.config import SPECTRAL_CONFIG, status
from simulate.discrete import DiscreteSystem, solve_forward
from .errors import EigenSolverError, WitnessNotFoundError


@dataclass
class Witness:
    mu: float
    eigenvalue: float
    vector: np.ndarray
    control_residual: float
    eigen_residual: float
    cluster_size: int = 1

    def component(self, y: np.ndarray) -> float:
        return float(np.asarray(y) @ self.vector)

    def to_dict(self) -> dict:
        return {
            'mu': self.mu,
            'step_eigenvalue': self.eigenvalue,
            'control_residual': self.control_residual,
            'eigen_residual': self.eigen_residual,
            'cluster_size': self.cluster_size,
        }


def _clusters(values: np.ndarray, tolerance: float) -> List[np.ndarray]:
    order = np.argsort(values)
    groups, current = [], [order[0]]
    for index in order[1:]:
        if abs(values[index] - values[current[-1]]) <= tolerance * max(1.0, abs(values[current[-1]])):
            current.append(index)
        else:
            groups.append(np.array(current))
            current = [index]
    groups.append(np.array(current))
    return groups


def find_witness(ds: DiscreteSystem, which: str = None, tolerance: float = None,
                 cluster_tolerance: float = None) -> Witness:
    """
    Search the real spectrum of A^T for an eigenvector annihilated by B^T.

    Eigenvalue clusters are screened by the smallest singular value of B^T V
    (V an orthonormal basis of the cluster) and the best candidates refined on
    the stacked matrix [A^T - mu I; B^T].

    Raises:
        EigenSolverError: the dense eigensolver failed
        WitnessNotFoundError: no candidate meets the tolerance
    """
    tolerance = SPECTRAL_CONFIG['witness_tolerance'] if tolerance is None else tolerance
    cluster_tolerance = SPECTRAL_CONFIG['cluster_tolerance'] if cluster_tolerance is None else cluster_tolerance
    At = ds.A.T.toarray()
    Bt = ds.control_matrix(which).T.toarray()
    scale = max(np.linalg.norm(At, np.inf), 1.0)
    try:
        values, vectors = scipy.linalg.eig(At)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"dense eigensolver failed: {e}")

    real = np.abs(values.imag) <= 1e-8 * scale
    if not np.any(real):
        raise WitnessNotFoundError("A has no real eigenvalues")
    values, vectors = values.real[real], vectors[:, real].real

    candidates = []
    for group in _clusters(values, cluster_tolerance):
        basis, _ = np.linalg.qr(vectors[:, group])
        screen = np.linalg.svd(Bt @ basis, compute_uv=False)
        candidates.append((float(screen[-1]), float(np.mean(values[group])), len(group)))
    candidates.sort()
    status(f"🔍 {len(candidates)} eigenvalue clusters, best screen {candidates[0][0]:.3e}", 2)

    identity = np.eye(At.shape[0])
    best = None
    for screen, mu, size in candidates[:5]:
        stacked = np.vstack([At - mu * identity, Bt])
        w = np.linalg.svd(stacked)[2][-1]
        mu = float(w @ At @ w)
        eigen_residual = float(np.linalg.norm(At @ w - mu * w, np.inf) / scale)
        control_residual = float(np.linalg.norm(Bt @ w))
        if best is None or control_residual + eigen_residual < best.control_residual + best.eigen_residual:
            best = Witness(mu=mu, eigenvalue=ds.step_eigenvalue(mu), vector=w,
                           control_residual=control_residual, eigen_residual=eigen_residual,
                           cluster_size=size)
    if best.control_residual > tolerance or best.eigen_residual > tolerance:
        raise WitnessNotFoundError(f"best candidate has |B^T w| = {best.control_residual:.3e} and eigen "
                                   f"residual {best.eigen_residual:.3e} (tolerance {tolerance:.1e})")
    status(f"✅ Witness at mu = {best.mu:.6g}: |B^T w| = {best.control_residual:.1e}", 2)
    return best


@dataclass
class InvariantReport:
    drifts: List[float] = field(default_factory=list)
    factor: float = 1.0

    @property
    def max_drift(self) -> float:
        return max(self.drifts) if self.drifts else 0.0

    def to_dict(self) -> dict:
        return {'drifts': self.drifts, 'max_drift': self.max_drift, 'lambda_power': self.factor}


def invariant_functional_test(ds: DiscreteSystem, witness: Witness, controls: Sequence[np.ndarray] = None,
                              y0: np.ndarray = None, count: int = None, rng: np.random.Generator = None,
                              which: str = None) -> InvariantReport:
    """
    Check <y(T), w> = lambda^K <y0, w> for u = 0 and random controls.

    Drifts are relative to lambda^K |y0| |w|.
    """
    rng = rng or np.random.default_rng(0)
    count = SPECTRAL_CONFIG['random_controls'] if count is None else count
    w = witness.vector
    if y0 is None:
        y0 = w + 0.1 * rng.normal(size=w.size) / np.sqrt(w.size)
    if controls is None:
        shape = (ds.grid.steps, ds.control_size(which))
        controls = [np.zeros(shape)] + [rng.normal(size=shape) for _ in range(count)]
    factor = witness.eigenvalue ** ds.grid.steps
    expected = factor * (y0 @ w)
    scale = abs(factor) * np.linalg.norm(y0) * np.linalg.norm(w)
    report = InvariantReport(factor=float(factor))
    for u in controls:
        terminal = solve_forward(ds, y0, u, which=which).terminal
        report.drifts.append(float(abs(terminal @ w - expected) / scale))
    status(f"📊 invariant drift over {len(controls)} controls: {report.max_drift:.2e}", 2)
    return report


def witness_initial_state(ds: DiscreteSystem, witness: Witness) -> np.ndarray:
    """Initial state whose witness component is 1 in the discrete L2 product."""
    return witness.vector / ds.grid.norm(witness.vector)
