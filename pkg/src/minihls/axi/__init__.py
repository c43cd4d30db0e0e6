from .iface import (Bundle, InterfaceConfig, InterfaceSpec, infer_interfaces,
                    tag_bundles)
from .plan import (PAGE, AxiTransaction, DelayConfig, beat_wdata, merge_rdata,
                   plan_access)
from .protocol import TRACE_FIELDS, ProtocolChecker, check_trace

__all__ = [
    "Bundle", "InterfaceConfig", "InterfaceSpec", "infer_interfaces",
    "tag_bundles", "PAGE", "AxiTransaction", "DelayConfig", "beat_wdata",
    "merge_rdata", "plan_access", "TRACE_FIELDS", "ProtocolChecker",
    "check_trace",
]
