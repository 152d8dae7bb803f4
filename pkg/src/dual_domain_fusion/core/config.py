"""Model and training configuration."""

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

from ..data.defaults import DEFAULT_CONFIG
from ..errors import ConfigurationError
from .spatial import GATES
from .spectral import BASIS_VARIANTS, default_frequencies


@dataclass(frozen=True)
class FusionConfig:
    """
    Every setting of the fusion pipeline and its toy training run.

    Keys match the JSON config file. ``freqs`` of None means the default
    zigzag frequency selection for (n, H, W).
    """

    C: int = DEFAULT_CONFIG['C']
    H: int = DEFAULT_CONFIG['H']
    W: int = DEFAULT_CONFIG['W']
    reduction: int = DEFAULT_CONFIG['reduction']
    n: int = DEFAULT_CONFIG['n']
    freqs: Optional[Tuple[Tuple[int, int], ...]] = None
    basis_variant: str = DEFAULT_CONFIG['basis_variant']
    r_e: int = DEFAULT_CONFIG['r_e']
    m: int = DEFAULT_CONFIG['m']
    seed: int = DEFAULT_CONFIG['seed']
    epochs: int = DEFAULT_CONFIG['epochs']
    lr: float = DEFAULT_CONFIG['lr']
    batch: int = DEFAULT_CONFIG['batch']
    gate: str = DEFAULT_CONFIG['gate']
    threshold: float = DEFAULT_CONFIG['threshold']
    samples: int = DEFAULT_CONFIG['samples']
    image_size: int = DEFAULT_CONFIG['image_size']
    use_bidir: bool = DEFAULT_CONFIG['use_bidir']
    use_spectral: bool = DEFAULT_CONFIG['use_spectral']
    use_superposition: bool = DEFAULT_CONFIG['use_superposition']
    lr_schedule: Tuple[Tuple[int, float], ...] = field(default_factory=tuple)
    feather: float = DEFAULT_CONFIG['feather']

    @classmethod
    def keys(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'FusionConfig':
        """
        Build and validate a config from a JSON-style dictionary.

        Raises
        ------
        ConfigurationError
            On unknown keys or violated constraints
        """
        unknown = sorted(set(values) - set(cls.keys()))
        if unknown:
            raise ConfigurationError(f'Unknown config keys: {unknown}')
        settings = dict(values)
        if settings.get('freqs') is not None:
            settings['freqs'] = tuple(tuple(int(i) for i in pair) for pair in settings['freqs'])
        if settings.get('lr_schedule'):
            settings['lr_schedule'] = tuple((int(e), float(lr)) for e, lr in settings['lr_schedule'])
        else:
            settings['lr_schedule'] = ()
        config = cls(**settings)
        config.validate()
        return config

    def with_overrides(self, **overrides) -> 'FusionConfig':
        """Copy with non-None overrides applied, then validated."""
        config = replace(self, **{k: v for k, v in overrides.items() if v is not None})
        config.validate()
        return config

    def frequencies(self) -> List[Tuple[int, int]]:
        if self.freqs is None:
            return default_frequencies(self.n, self.H, self.W)
        return [tuple(pair) for pair in self.freqs]

    @property
    def backbone_input(self) -> int:
        """Image side the toy backbone expects for an H x W feature map."""
        return 4 * self.H

    def validate(self) -> None:
        problems = []
        for name in ('C', 'H', 'W', 'reduction', 'n', 'r_e', 'm', 'batch', 'samples', 'image_size'):
            if getattr(self, name) <= 0:
                problems.append(f'{name} must be positive, got {getattr(self, name)}')
        if problems:
            raise ConfigurationError('; '.join(problems))
        if self.C % self.reduction:
            problems.append(f'C={self.C} is not divisible by reduction={self.reduction}')
        if self.C % self.n:
            problems.append(f'C={self.C} is not divisible by n={self.n}')
        if self.C % self.r_e:
            problems.append(f'C={self.C} is not divisible by r_e={self.r_e}')
        if (self.H * self.W) % self.m:
            problems.append(f'H*W={self.H * self.W} is not divisible by m={self.m}')
        if self.freqs is None:
            try:
                default_frequencies(self.n, self.H, self.W)
            except ConfigurationError as exc:
                problems.append(str(exc))
        else:
            if len(self.freqs) != self.n:
                problems.append(f'freqs has {len(self.freqs)} entries, expected n={self.n}')
            for u, v in self.freqs:
                if not (0 <= u < self.H and 0 <= v < self.W):
                    problems.append(f'frequency ({u}, {v}) outside a {self.H}x{self.W} grid')
        if self.basis_variant not in BASIS_VARIANTS:
            problems.append(f'basis_variant must be one of {BASIS_VARIANTS}, got {self.basis_variant!r}')
        if self.gate not in GATES:
            problems.append(f'gate must be one of {GATES}, got {self.gate!r}')
        if self.epochs < 0:
            problems.append(f'epochs must be non-negative, got {self.epochs}')
        if self.lr < 0:
            problems.append(f'lr must be non-negative, got {self.lr}')
        if self.samples % 2:
            problems.append(f'samples must be even, got {self.samples}')
        for epoch, rate in self.lr_schedule:
            if epoch < 0 or rate < 0:
                problems.append(f'lr_schedule entry [{epoch}, {rate}] must be non-negative')
        if self.feather < 0:
            problems.append(f'feather must be non-negative, got {self.feather}')
        if problems:
            raise ConfigurationError('; '.join(problems))

    def validate_toy(self) -> None:
        """Extra constraints of the toy backbone: square maps at a quarter of the image side."""
        if self.H != self.W or self.image_size != self.backbone_input:
            raise ConfigurationError(
                f'The toy backbone maps {self.image_size}x{self.image_size} images to '
                f'{self.image_size // 4}x{self.image_size // 4} features, config has H={self.H}, W={self.W}'
            )

    def learning_rate(self, epoch: int) -> float:
        """Rate for an epoch: the last schedule entry at or before it, else ``lr``."""
        rate = self.lr
        for start, scheduled in sorted(self.lr_schedule):
            if start <= epoch:
                rate = scheduled
        return rate

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values['freqs'] = None if self.freqs is None else [list(pair) for pair in self.freqs]
        values['lr_schedule'] = [list(entry) for entry in self.lr_schedule]
        return values
