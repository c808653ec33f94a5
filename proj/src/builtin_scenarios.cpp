#include "kllab/scenarios.hpp"

namespace kllab::scenarios {

const std::vector<BuiltIn>& builtins() {
  static const std::vector<BuiltIn> list = {
      {"no-triangle", "KL(proposed||trusted) is infinite although both are within epsilon of the base",
       R"(name: no-triangle
experiment: no-triangle
description: KL(proposed||trusted) is infinite although both are within epsilon of the base
epsilon: 0.1
)"},
      {"switch-bound", "switch policy's lifetime KL to the augmented mixture stays below the wrapper overhead",
       R"(name: switch-bound
experiment: switch-bound
description: switch policy's lifetime KL to the augmented mixture stays below the wrapper overhead
seed: 11
alphabet: 2
models:
  - kind: stationary
    action: [0.875, 0.125]
    observation: [0.75, 0.25]
  - kind: table
    order: 1
    action: [[1, 0], [0.5, 0.5]]
    observation: [[0.875, 0.125], [0.25, 0.75]]
  - kind: table
    order: 1
    action: [[0.75, 0.25], [0.75, 0.25]]
    observation: [[0.625, 0.375], [0.375, 0.625]]
utility:
  kind: observation-reward
  reward: [0, 1]
trigger:
  kind: observation-seen
  symbol: 1
lookahead: 3
training_steps: [2, 5, 10, 20]
target_gap: 0.01
)"},
      {"tvd-pathology", "TVD-constrained optimum raises only V-optimal actions, even ones the base never takes",
       R"(name: tvd-pathology
experiment: tvd-pathology
description: TVD-constrained optimum raises only V-optimal actions, even ones the base never takes
alphabet: 3
horizon: 1
models:
  - kind: stationary
    action: [0.5, 0.5, 0]
    observation: [0.5, 0.25, 0.25]
  - kind: stationary
    action: [0.75, 0.25, 0]
    observation: [0.25, 0.5, 0.25]
utility:
  kind: action-reward
  reward: [0.25, 0.5, 1]
budgets: [0, 0.05, 0.1, 0.2, 0.3]
resolution: 100
)"},
      {"pessimist-retention", "mu stays in the top set along its own samples with probability at least 1 - delta",
       R"(name: pessimist-retention
experiment: pessimist-retention
description: mu stays in the top set along its own samples with probability at least 1 - delta
seed: 2024
alphabet: 2
models:
  - {kind: stationary, action: [0.5, 0.5], observation: [0.5, 0.5], prior: 0.2}
  - {kind: stationary, action: [0.625, 0.375], observation: [0.375, 0.625], prior: 0.2}
  - {kind: stationary, action: [0.75, 0.25], observation: [0.75, 0.25], prior: 0.2}
  - {kind: stationary, action: [0.875, 0.125], observation: [0.5, 0.5], prior: 0.2}
  - {kind: stationary, action: [0.625, 0.375], observation: [0.875, 0.125], prior: 0.2}
mu: 2
delta: 0.1
alpha_factor: 0.05
histories: 1000
length_steps: 50
)"},
      {"pessimist-containment", "the pessimistic imitator sits below mu and is never KL-closer to any policy",
       R"(name: pessimist-containment
experiment: pessimist-containment
description: the pessimistic imitator sits below mu and is never KL-closer to any policy
seed: 5
alphabet: 2
models:
  - {kind: stationary, action: [0.75, 0.25], observation: [0.5, 0.5], prior: 0.4}
  - kind: table
    order: 1
    action: [[0.5, 0.5], [0.875, 0.125]]
    observation: [[0.625, 0.375], [0.25, 0.75]]
    prior: 0.35
  - {kind: stationary, action: [0.375, 0.625], observation: [0.75, 0.25], prior: 0.25}
mu: 0
alpha: 0.3
horizon: 3
policies: 60
)"},
      {"budget-sweep", "KL-constrained value rises with the budget from the base value to the optimum",
       R"(name: budget-sweep
experiment: budget-sweep
description: KL-constrained value rises with the budget from the base value to the optimum
alphabet: 2
horizon: 3
models:
  - kind: table
    order: 1
    action: [[0.75, 0.25], [0.75, 0.25]]
    observation: [[0.875, 0.125], [0.25, 0.75]]
  - kind: table
    order: 1
    action: [[0.875, 0.125], [0.5, 0.5]]
    observation: [[0.5, 0.5], [0.125, 0.875]]
utility:
  kind: observation-reward
  reward: [0, 1]
budgets: [0, 0.01, 0.03, 0.1, 0.3, 1, 3, 10]
)"},
      {"budget-spend-profile", "nearly all of a switch policy's KL is paid at the switch step",
       R"(name: budget-spend-profile
experiment: budget-spend-profile
description: nearly all of a switch policy's KL is paid at the switch step
seed: 3
alphabet: 2
horizon: 8
models:
  - {kind: stationary, action: [1, 0], observation: [0.5, 0.5]}
  - kind: table
    order: 1
    action: [[1, 0], [1, 0]]
    observation: [[0.75, 0.25], [0.25, 0.75]]
  - {kind: stationary, action: [1, 0], observation: [0.875, 0.125]}
trigger:
  kind: at-timestep
  value: 4
post: {kind: stationary, action: [0, 1], observation: [0.5, 0.5]}
rollouts: 20
threshold: 0.9
)"},
      {"kraft-audit", "the finite program language is prefix-free and complete: Kraft sum exactly one",
       R"(name: kraft-audit
experiment: kraft-audit
description: the finite program language is prefix-free and complete, Kraft sum exactly one
alphabets: [2, 3, 4]
parse_depth: 14
)"},
      {"simplest-event-scan", "shortest unprecedented timestep event dips at powers of two",
       R"(name: simplest-event-scan
experiment: simplest-event-scan
description: shortest unprecedented timestep event dips at powers of two
alphabet: 2
scan_exponent: 20
t_max_exponent: 21
detail_limit: 512
)"},
  };
  return list;
}

}  // namespace kllab::scenarios
