# normalize/__init__.py
"""
Coupling normalization: flow straightening followed by gauge removal, so that
the coupling of the second equation becomes d/dx1 on a sub-window.
"""

from dataclasses import dataclass
from typing import Optional

from config.config import status
from solvability import ParabolicSystem
from symbolic import ONE, ZERO
from .errors import NormalizationError
from .flow import FlowMap, build_flow_map, coupling_residual, straighten_coupling
from .gauge import GaugeFunction, gauge_transform


@dataclass
class NormalizationResult:
    system: ParabolicSystem
    flow: Optional[FlowMap]
    gauge: GaugeFunction
    coupling_residual: float

    def to_dict(self) -> dict:
        return {
            'flow': self.flow.to_dict() if self.flow else None,
            'gauge': self.gauge.to_dict(),
            'coupling_residual': self.coupling_residual,
            'system': self.system.to_dict(),
        }


def normalize_system(system: ParabolicSystem, edge: str = None, ode_tol: float = None,
                     table_size: int = None, epsilon: float = None) -> NormalizationResult:
    """Straighten (unless g21 is already e1) and gauge; the result declares the normal form."""
    status(f"🚀 Normalizing coupling of {system.name or 'system'}", 1)
    already_straight = all(g == (ONE if i == 0 else ZERO) for i, g in enumerate(system.g21))
    flow = None
    residual = 0.0
    if not already_straight:
        system, flow, residual = straighten_coupling(system, edge, ode_tol, table_size, epsilon)
    gauged, gauge = gauge_transform(system)
    if not gauged.normal_form:
        raise NormalizationError("a21 did not vanish after the gauge transform")
    return NormalizationResult(system=gauged, flow=flow, gauge=gauge, coupling_residual=residual)


__all__ = [
    'NormalizationError', 'FlowMap', 'GaugeFunction', 'NormalizationResult',
    'build_flow_map', 'coupling_residual', 'straighten_coupling', 'gauge_transform', 'normalize_system',
]
