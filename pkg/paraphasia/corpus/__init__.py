from .balance import upsample_balance
from .folds import FoldSpec, loso_folds, split_protocol
from .manifest import read_manifest, write_manifest

__all__ = ["FoldSpec", "loso_folds", "read_manifest", "split_protocol", "upsample_balance", "write_manifest"]
