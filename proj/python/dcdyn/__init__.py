"""Data-center dynamic load simulator."""

from ._dcdyn import (
    ConfigError,
    Error,
    SimLog,
    builtin_names,
    builtin_text,
    check_disconnect,
    emit_csv,
    events_csv,
    it_power,
    motor_equilibrium_slip,
    pulse_value,
    run,
    serialize_scenario,
    timeseries_csv,
    validate,
    zip_power,
)

__all__ = [
    "ConfigError",
    "Error",
    "SimLog",
    "builtin_names",
    "builtin_text",
    "check_disconnect",
    "emit_csv",
    "events_csv",
    "it_power",
    "motor_equilibrium_slip",
    "pulse_value",
    "run",
    "serialize_scenario",
    "timeseries_csv",
    "validate",
    "zip_power",
]
