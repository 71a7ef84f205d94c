"""Python bindings for the rigidity-lab C++ core."""

from ._core import (
    SCHEMA,
    Conjugacy,
    ExperimentConfig,
    PerturbedMap,
    RigidityError,
    RotationResult,
    ac_diagnostic,
    aggregate,
    analyze_linear,
    circle_map,
    continued_fraction,
    holder_exponent,
    ko_report,
    load_config,
    parse_config,
    periodic_orbits,
    rotation_number,
    run,
    set_thread_count,
    solve_conjugacy,
    thread_count,
    verify_anosov,
)


__all__ = [name for name in dir() if not name.startswith("_")]
