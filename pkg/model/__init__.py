from .export import load_attention, prediction_maps, render_attention, save_attention, write_reconstruction
from .network import ForwardResult, MultiGranularMAE, fuse_kv
from .params import ModelParams, decays, init_params, input_widths, parameter_shapes

__all__ = [
    "MultiGranularMAE",
    "ForwardResult",
    "fuse_kv",
    "ModelParams",
    "decays",
    "init_params",
    "input_widths",
    "parameter_shapes",
    "save_attention",
    "load_attention",
    "render_attention",
    "prediction_maps",
    "write_reconstruction",
]
