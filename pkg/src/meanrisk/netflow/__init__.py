"""Networks, max flow, budgeted interdiction and the mean-risk interdiction inner solver."""

from meanrisk.netflow.interdiction import interdiction_inner, max_flow_min_cut
from meanrisk.netflow.maxflow import FlowGraph, FlowResult
from meanrisk.netflow.mrni import MRNIMinimizer, effective_capacities, mrni_inner_minimizer, mrni_instance
from meanrisk.netflow.network import CutSolution, Network

__all__ = [
    "CutSolution",
    "FlowGraph",
    "FlowResult",
    "MRNIMinimizer",
    "Network",
    "effective_capacities",
    "interdiction_inner",
    "max_flow_min_cut",
    "mrni_inner_minimizer",
    "mrni_instance",
]
