"""Default configuration values for slotswap."""

# Default configuration dictionary
DEFAULT_CONFIG = {
    # Sprite dataset: attribute schema, how each value renders, and jitter ranges
    "sprites": {
        "image_size": 64,
        "attributes": [
            {"name": "shape", "values": ["circle", "square"]},
            {"name": "color", "values": ["red", "green", "blue"]},
            {"name": "size", "values": ["small", "large"]},
        ],
        "render": {
            "shape": {"circle": {"shape": "circle"}, "square": {"shape": "square"}},
            "color": {
                "red": {"color": [220, 40, 40]},
                "green": {"color": [40, 200, 60]},
                "blue": {"color": [40, 80, 230]},
            },
            "size": {"small": {"radius": 0.1}, "large": {"radius": 0.2}},
        },
        "jitter": {
            "position_fraction": 0.25,
            "background": [20, 80],
            "rotation": 15.0,
        },
        "seed": 0,
        # Render parameters for kinds no attribute controls
        "defaults": {"shape": "circle", "color": [220, 40, 40], "radius": 0.2},
    },

    # Network widths (desk scale: 64px input, 16x16 latent grid)
    "network": {
        "base_channels": 16,
        "discriminator_base_channels": 16,
        "uniqueness_channels": 64,
        "per_attribute_channels": 16,
        "normalization": "instance",
        "negative_slope": 0.2,
    },

    # Generation loss weights; a non-null alpha replaces them with (1-a, a, 0)
    "loss": {
        "lambda1": 1.0,
        "lambda2": 10.0,
        "lambda3": 10.0,
        "alpha": None,
        "metric": "l1",
        "huber_delta": 1.0,
        "attr_target": "reference",
    },

    # Training schedule and optimizers
    "training": {
        "iterations": 8000,
        "batch_size": 16,
        "lr": 2e-4,
        "betas": [0.5, 0.999],
        "discriminator_lr": 2e-4,
        "discriminator_betas": [0.5, 0.999],
        "mode": "instance",
        "multiplex_augment_prob": 0.0,
        "checkpoint_every": 1000,
        "seed": 0,
        "held_out_fraction": 0.2,
        "discriminator_steps": 1,
        "registry_ema_rate": 0.01,
        "divergence_threshold": 1e4,
        "device": "cpu",
        "dtype": "float32",
    },

    # Evaluation and embedding export
    "evaluation": {
        "sample_count": 100,
        "probe_kind": "oracle",
        "held_out_fraction": 0.2,
        "probe_gate": 0.98,
        "seed": 0,
        "batch_size": 32,
        "embedding_method": "pca",
    },

    # Logging Configuration
    "logging": {
        "level": "INFO",
        "file": None,
        "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    },
}

# Sections whose contents are free-form: a user value replaces the default
# wholesale and its keys are not checked against DEFAULT_CONFIG
OPAQUE_FIELDS = [
    "sprites.attributes",
    "sprites.render",
    "sprites.defaults",
]

