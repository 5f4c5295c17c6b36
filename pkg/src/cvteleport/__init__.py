"""All-optical continuous-variable teleportation in exact Bogoliubov-coefficient form."""

from importlib.resources import files

from .circuits import (
    Circuit,
    CircuitError,
    RunResult,
    Step,
    build_ao_classical,
    build_ao_quantum,
    build_eo_classical,
    build_fig3_amplifier,
    build_preset,
    composite_amplifier,
    run,
)
from .dsl import ParseError, SemanticError, format_circuit, parse, parse_file
from .metrics import (
    TeleportReport,
    added_noise,
    coherent_fidelity,
    conditional_variance,
    report,
    transfer_coefficients,
)
from .modes import (
    BogoliubovMode,
    QuadratureStats,
    VacuumBasis,
    beamsplitter,
    degenerate_pa,
    displace_reconstruct,
    eo_classical_channel,
    ideal_linear_amplifier,
    joint_stats,
    new_basis,
    nondegenerate_pa,
    quadrature_stats,
)

__version__ = "0.1.0"


def preset_path(name: str):
    """Path to a shipped ``.qot`` file, e.g. ``preset_path("fig2")``."""
    return files(__package__) / "presets" / f"{name}.qot"
