from .base import BaseClusterer, ReorgCost, ReorgRates, check_capacity, check_database
from .cactis import CactisClusterer, greedy_blocks, recluster, recluster_cost
from .ck import (
    CkClusterer,
    CkParams,
    SplitResult,
    attribute_impl_costs,
    choose_initial_relationship,
    on_attribute_update,
    page_split,
    place_object,
)
from .orion import OrionClusterer, cluster_all, cluster_message_cost

__all__ = [
    "BaseClusterer", "ReorgCost", "ReorgRates", "check_capacity", "check_database",
    "CactisClusterer", "greedy_blocks", "recluster", "recluster_cost",
    "CkClusterer", "CkParams", "SplitResult", "attribute_impl_costs",
    "choose_initial_relationship", "on_attribute_update", "page_split", "place_object",
    "OrionClusterer", "cluster_all", "cluster_message_cost",
]
