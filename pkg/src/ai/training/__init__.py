from .checkpoint import Checkpoint, CheckpointManifest, load_checkpoint, save_checkpoint
from .trainer import (EncodedPair, EpochSchedule, RoundSchedule, TestSplit, TrainConfig, TrainResult,
                      TrainSplit, ValidationSplit, encode_split, train, validate)
