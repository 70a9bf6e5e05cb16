"""Hot-kernel backend selection: compiled extension if built, numpy otherwise.

Both backends implement the same three functions on flat arrays; see
benchmarks/bench_kernels.py for the speed comparison.
"""

try:
    from . import _kernels as _impl
except ImportError:  # extension not built; pure Python fallback
    from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
apply_local_phase = _impl.apply_local_phase
abs2_sum = _impl.abs2_sum
nonlinear_energy_sum = _impl.nonlinear_energy_sum
