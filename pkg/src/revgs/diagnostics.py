"""Per-sample scalar diagnostics collected along a trajectory."""
from __future__ import annotations

from dataclasses import dataclass, fields

from .core import DomainError, Equilibrium, Parameters, State, total_mass
from .functionals import global_functionals, local_functionals, perturbation
from .grid import GridSpec
from .thermo import diffusion_dissipation, free_energy, reaction_dissipation

COLUMNS = (
    "t", "mass", "F", "D_d", "D_r", "E_L", "D_L", "E_g", "D_g",
    "clamp_events", "monitor_lhs", "monitor_rhs",
)


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float | None = None
    F: float | None = None
    D_d: float | None = None
    D_r: float | None = None
    E_L: float | None = None
    D_L: float | None = None
    E_g: float | None = None
    D_g: float | None = None
    clamp_events: int | None = None
    monitor_lhs: float | None = None
    monitor_rhs: float | None = None

    def as_row(self) -> list:
        return [getattr(self, c) for c in COLUMNS]


assert tuple(f.name for f in fields(DiagnosticsRecord)) == COLUMNS


def diagnose(
    state: State,
    grid: GridSpec,
    params: Parameters,
    entropy_eq: Equilibrium | None = None,
    global_eq: Equilibrium | None = None,
    clamp_events: int = 0,
) -> DiagnosticsRecord:
    """Evaluate every diagnostic that is defined for this state.

    Entropy quantities need ``entropy_eq`` and strictly positive fields;
    ``D_r`` additionally needs reversible kinetics.  ``E_g``/``D_g`` are
    measured against ``global_eq``.  Undefined quantities stay ``None``.
    """
    rec = DiagnosticsRecord(t=state.time, mass=total_mass(state, grid), clamp_events=clamp_events)
    loc = local_functionals(state, params, grid)
    rec.E_L, rec.D_L = loc.E_L, loc.D_L
    try:
        rec.D_d = diffusion_dissipation(state, params, grid)
        if entropy_eq is not None:
            rec.F = free_energy(state, entropy_eq, grid)
        if params.reversible:
            rec.D_r = reaction_dissipation(state, params, grid)
    except DomainError:
        pass
    if global_eq is not None:
        g = global_functionals(perturbation(state, global_eq), params, global_eq, grid)
        rec.E_g, rec.D_g = g.E_g, g.D_g
    return rec
