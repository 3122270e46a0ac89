from dataclasses import dataclass, asdict

from core.units import parse_quantity
from utils.errors import ConfigurationError

METHODS = ('spectral-poisson', 'green-kernel')
ZERO_MODE_POLICIES = ('drop', 'neutralizing-background')
PADDING_FACTORS = (1, 2, 3)


@dataclass(frozen=True)
class SolverConfig:
    '''
    How internal potentials are computed.

    Fields:
        method (str): 'spectral-poisson' divides by k**2 in Fourier space,
            'green-kernel' convolves with sampled real-space kernels.
        zero_mode_policy (str): 'drop' zeroes the k = 0 mode and flags
            non-neutral sources; 'neutralizing-background' subtracts the mean
            source silently. Only used on the periodic route.
        padding_factor (int): 1 is the periodic box; 2 or 3 zero-pads the box
            for an isolated-system convolution.
        softening (float): Plummer softening length a (bohr), 0 for bare kernels.
    '''
    method: str = 'spectral-poisson'
    zero_mode_policy: str = 'drop'
    padding_factor: int = 1
    softening: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f'unknown solver method {self.method!r}; expected one of {METHODS}')
        if self.zero_mode_policy not in ZERO_MODE_POLICIES:
            raise ConfigurationError(
                f'unknown zero-mode policy {self.zero_mode_policy!r}; expected one of {ZERO_MODE_POLICIES}'
            )
        if self.padding_factor not in PADDING_FACTORS:
            raise ConfigurationError(f'padding_factor must be one of {PADDING_FACTORS}, got {self.padding_factor}')
        if not self.softening >= 0.0:
            raise ConfigurationError(f'softening must be >= 0, got {self.softening}')

    @property
    def isolated(self):
        return self.padding_factor > 1

    @classmethod
    def from_dict(cls, payload):
        payload = dict(payload or {})
        unknown = set(payload) - {'method', 'zero_mode_policy', 'padding_factor', 'softening'}
        if unknown:
            raise ConfigurationError(f'unknown solver keys: {", ".join(sorted(unknown))}')
        softening = payload.get('softening', 0.0)
        if isinstance(softening, str):
            softening = parse_quantity(softening, 'length')
        return cls(
            method=payload.get('method', 'spectral-poisson'),
            zero_mode_policy=payload.get('zero_mode_policy', 'drop'),
            padding_factor=int(payload.get('padding_factor', 1)),
            softening=float(softening),
        )

    def as_dict(self):
        return asdict(self)
