#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The adsmarket Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------
//
// Meta-path-guided random walks feeding the embedding trainer. Transition
// probabilities are proportional to edge weight among type-compatible
// neighbors. A closed path (end type == start type) repeats cyclically; an
// open path reflects: forward to the end, back to the start, forward again.
// Walks truncate early only at nodes with no compatible neighbor.

#include <vector>

#include "adsmarket/hetgraph.hpp"
#include "adsmarket/rng.hpp"

namespace adsmarket {

inline std::vector<std::vector<NodeRef>> metapath_walks(const HetGraph& g, const MetaPath& p,
                                                        int walks_per_node, int walk_length,
                                                        Rng& rng) {
  p.validate();
  const bool closed = p.start_type() == p.end_type();
  const size_t n_steps = p.steps.size();
  std::vector<std::vector<NodeRef>> corpus;
  const int n_start = g.node_count(p.start_type());
  corpus.reserve(static_cast<size_t>(n_start) * static_cast<size_t>(walks_per_node));

  std::vector<double> weights;
  for (int start = 0; start < n_start; ++start) {
    for (int w = 0; w < walks_per_node; ++w) {
      std::vector<NodeRef> walk;
      walk.push_back({p.start_type(), start});
      size_t pos = 0;       // index into p.steps
      bool ahead = true;    // reflection direction for open paths
      int cur = start;
      while (static_cast<int>(walk.size()) < walk_length) {
        MetaPathStep step = p.steps[pos];
        if (!ahead) step.forward = !step.forward;  // walk the relation back
        const auto& nbrs = g.step_neighbors(step, cur);
        if (nbrs.empty()) break;
        weights.clear();
        weights.reserve(nbrs.size());
        for (const auto& [id, wt] : nbrs) weights.push_back(wt);
        const auto& picked = nbrs[rng.discrete(weights)];
        cur = picked.first;
        walk.push_back({step.to(), cur});
        if (ahead) {
          if (pos + 1 < n_steps) {
            ++pos;
          } else if (closed) {
            pos = 0;
          } else {
            ahead = false;  // bounce back along the path
          }
        } else {
          if (pos > 0) {
            --pos;
          } else {
            ahead = true;
          }
        }
      }
      corpus.push_back(std::move(walk));
    }
  }
  return corpus;
}

}  // namespace adsmarket
