"""Fine-tuning entry points."""

import json

# hyperparameter defaults
LEARNING_RATE = 2e-4
BATCH_SIZE = 128
EPOCHS = 3
WARMUP_STEPS = 100

def config(overrides=None):
    base = {
        "lr": LEARNING_RATE,
        "batch_size": BATCH_SIZE,
        "epochs": EPOCHS,
        "warmup": WARMUP_STEPS,
    }
    base.update(overrides or {})
    return base

def save_config(cfg, path):
    # canonical key order for diffing
    with open(path, "w") as handle:
        json.dump(cfg, handle, sort_keys=True)

# adapter export names
ADAPTER_WEIGHTS = "adapter_model.bin"
ADAPTER_CONFIG = "adapter_config.json"
def export_paths(out_dir):
    return [
        out_dir + "/" + ADAPTER_WEIGHTS,
        out_dir + "/" + ADAPTER_CONFIG,
    ]

# evaluation gate thresholds
MIN_ACCURACY = 0.75
MAX_REGRESSION = 0.02
def passes_gate(accuracy, regression):
    ok = accuracy >= MIN_ACCURACY
    return ok and regression <= MAX_REGRESSION
