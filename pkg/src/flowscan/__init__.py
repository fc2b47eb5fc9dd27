"""Cross-scale OD flow cluster detection, significance testing, selection,
and flow map rendering."""

from .aggregate import PreaggregateResult, preaggregate
from .dataset import (EmptyFlowTableError, Flow, FlowDataset, IngestionError,
                      Location, Neighborhood, SelfFlowError,
                      UnknownLocationError, flow_between, load_dataset,
                      neighborhood)
from .estimators import ClusterSelector, FlowClusterScan, PermutationSignificance
from .render import (FlowGlyph, MapProjection, SymbolStyle, class_of,
                     classify_strength, layout_glyph, render_svg)
from .scan import (FlowCluster, ScanConfig, ScanResult, expected_flow, lglr,
                   scan_all, scan_flow)
from .selection import SelectionRule, clusters_overlap, select
from .significance import (GumbelFit, NullDistribution,
                           PermutationInfeasibleError, fit_gumbel,
                           monte_carlo, p_value_gumbel, p_value_rank, permute,
                           threshold)
from .synth import (PlantedCluster, SynthSpec, default_spec, generate,
                    ground_truth_members, write_files)

__version__ = "0.1.0"
