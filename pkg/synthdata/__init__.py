from .codec import read_pgm, read_ppm, write_pgm, write_ppm
from .dataset import Dataset, DatasetManifest, generate_dataset, load_sample, save_sample
from .scene import MultiGranularSample, check_alignment, generate_sample

__all__ = [
    "MultiGranularSample",
    "generate_sample",
    "check_alignment",
    "save_sample",
    "load_sample",
    "generate_dataset",
    "Dataset",
    "DatasetManifest",
    "read_ppm",
    "write_ppm",
    "read_pgm",
    "write_pgm",
]
