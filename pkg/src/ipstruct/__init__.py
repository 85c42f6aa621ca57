"""Information-preserving structures of finite-dimensional quantum channels."""

__version__ = "0.1.0"

from .matcore import Tolerance, trace_norm  # noqa: E402
from .channel import (  # noqa: E402
    Channel,
    KrausMap,
    adjoint,
    apply,
    compose,
    from_kraus,
    make_paper_example,
    make_planted,
    power_mean,
    to_choi,
    to_superoperator,
)
from .spectral import fixed_spaces, joint_support, rotating_space  # noqa: E402
from .algebra import commutant, echo_map, fixed_state_form, structure_from_fixed_spaces  # noqa: E402
from .codes import (  # noqa: E402
    Code,
    analyze,
    helstrom,
    is_correctable,
    is_noiseless,
    is_preserved,
    is_unitarily_noiseless,
    make_code,
    transpose_channel,
)

__all__ = [
    "Tolerance", "trace_norm", "Channel", "KrausMap", "adjoint", "apply", "compose",
    "from_kraus", "make_paper_example", "make_planted", "power_mean", "to_choi",
    "to_superoperator", "fixed_spaces", "joint_support", "rotating_space", "commutant",
    "echo_map", "fixed_state_form", "structure_from_fixed_spaces", "Code", "analyze",
    "helstrom", "is_correctable", "is_noiseless", "is_preserved", "is_unitarily_noiseless",
    "make_code", "transpose_channel",
]
