"""Periodic KdV-KS waves: profiles, Bloch spectra, linear semigroup, simulation.

Thin bindings over the C++ library; the ``kdvks`` command line tool writes
the same quantities to disk.
"""

from ._core import (
    NumericalError,
    UsageError,
    Wave,
    apply_semigroup,
    bloch_eigenvalues,
    certify_stability,
    compute_wave,
    critical_expansion,
    galilean_boost,
    gap_scan,
    lattice_sum,
    load_profile,
    read_field,
    save_profile,
    simulate,
    symbol,
    version,
    write_field,
)

__version__ = "0.1.0"
