"""fogsim: energy-aware fog computing simulator.

Infrastructure is a mutable weighted directed multigraph, applications are
placed DAGs of streaming tasks, and every node and link carries a composable
power model reporting (static, dynamic) watts over time.
"""

from .application import (Application, ApplicationError, DataFlow, Placement,
                          PROCESSING, SINK, SOURCE, Task, set_flow_rate)
from .engine import (Configuration, ConfigurationView, EngineError, Probe,
                     READ, Simulator, UPDATE)
from .infrastructure import (CapacityError, ComputeNode, ConsistencyError,
                             DuplicateEntityError, EntityInUseError,
                             Infrastructure, InfrastructureError, NetworkLink,
                             UnknownEntityError)
from .orchestration import (ConsolidateStrategy, CloudOnlyStrategy,
                            DEFAULT_ROUTING, EvenSpreadStrategy,
                            NoFeasibleNode, NoFeasiblePath, PlacementError,
                            PlacementStrategy, RoutingPolicy, make_strategy,
                            place, reroute, shortest_path, unplace)
from .power import (ATTRIBUTION_MODES, AttributionError, DYNAMIC,
                    DataCenterPowerModel, FULL, LinearPowerModel,
                    LinkPowerModel, NodePowerModel, PowerMeasurement,
                    PowerModelError, SharedPowerModel, StatefulPowerModel,
                    ZERO_POWER, attribute_to_applications, compose_link_sigma,
                    derive_sigma, measure_infrastructure, peek_infrastructure,
                    sum_measurements)

__version__ = "0.1.0"
