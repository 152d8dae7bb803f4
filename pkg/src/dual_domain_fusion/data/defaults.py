"""Built-in defaults shared by the library and the command line."""

# Window-side ranges for the swap augmentation, inclusive, for 224 x 224 crops
DEFAULT_SCALE_RANGES = [[40, 80], [80, 120], [120, 160], [224, 224]]

DEFAULT_FEATHER = 4

DEFAULT_THRESHOLD = 0.5

TOY_FEATHER = 2

# Keys of the model/training config file; values are the built-in defaults
DEFAULT_CONFIG = {
    'C': 32,
    'H': 8,
    'W': 8,
    'reduction': 8,
    'n': 16,
    'freqs': None,
    'basis_variant': 'paper-literal',
    'r_e': 4,
    'm': 16,
    'seed': 0,
    'epochs': 30,
    'lr': 0.2,
    'batch': 16,
    'gate': 'sigmoid',
    'threshold': DEFAULT_THRESHOLD,
    'samples': 2000,
    'image_size': 32,
    'use_bidir': True,
    'use_spectral': True,
    'use_superposition': True,
    'lr_schedule': [],
    'feather': DEFAULT_FEATHER,
}

# Smallest configuration that exercises every divisibility rule
GRADCHECK_CONFIG = {
    'C': 4,
    'H': 8,
    'W': 8,
    'reduction': 2,
    'n': 4,
    'r_e': 2,
    'm': 8,
}
