from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class InstanceCanonicalizer:
    """
    Map arbitrary instance ids onto the fixed label space {0..k_max}.

    Instances are ranked by descending pixel area (ties: smaller original id) and
    take labels 1, 2, ...; every instance past rank k_max shares label k_max.
    Background stays 0.
    """

    k_max: int = 8

    def __call__(self, instance_map: np.ndarray) -> np.ndarray:
        return canonicalize_instances(instance_map, self.k_max)


def canonicalize_instances(instance_map: np.ndarray, k_max: int = 8) -> np.ndarray:
    ids, areas = np.unique(instance_map[instance_map > 0], return_counts=True)
    out = np.zeros(instance_map.shape, dtype=np.int64)
    if ids.size == 0:
        return out
    # lexsort sorts by the last key first: descending area, then ascending id
    order = np.lexsort((ids, -areas))
    for rank, position in enumerate(order):
        out[instance_map == ids[position]] = min(rank + 1, k_max)
    return out
