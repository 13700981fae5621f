#pragma once

// JSON-lines graph stream format:
//   {"t": int, "atoms": [{"nodes": [{"kind": "c"|"p", "class": str, "id": int}],
//                         "edges": [[nodeIndex, nodeIndex]], "attrs": {...}}]}
// Nodes are written in canonical (kind, class id, instance id) order and edges
// sorted, so equal graphs serialize to identical bytes. "attrs" maps a node
// index (as a string) to its attribute levels: numeric levels are arrays,
// opaque levels are lowercase hex strings.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgraph/core.hpp"

namespace semgraph::io {

nlohmann::json to_json(const AtomicGraph& g, const ClassCatalog& catalog);
nlohmann::json to_json(const MultiGraph& mg, const ClassCatalog& catalog);
AtomicGraph atomic_from_json(const nlohmann::json& j, const ClassCatalog& catalog);
MultiGraph multigraph_from_json(const nlohmann::json& j, const ClassCatalog& catalog);

/// Compact single-line dump of the canonical JSON form.
std::string canonical_string(const AtomicGraph& g, const ClassCatalog& catalog);
std::string canonical_string(const AttributeLevel& level);

std::vector<MultiGraph> read_graph_stream(std::istream& in, const ClassCatalog& catalog);
void write_graph_stream(std::ostream& out, const std::vector<MultiGraph>& stream,
                        const ClassCatalog& catalog);

/// Catalog holding every class name seen in a stream, each list sorted.
ClassCatalog infer_catalog(std::istream& in, std::size_t attribute_levels = 3);

nlohmann::json to_json(const ClassCatalog& catalog);
ClassCatalog catalog_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Goal& goal, const ClassCatalog& catalog);
/// Missing whitelists mean "everything"; unknown class names are input errors.
Goal goal_from_json(const nlohmann::json& j, const ClassCatalog& catalog);

}  // namespace semgraph::io
