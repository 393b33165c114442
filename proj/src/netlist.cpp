#include "dtwpa/netlist.hpp"

#include "dtwpa/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dtwpa {

const char* to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::resistor: return "resistor";
    case ElementKind::inductor: return "inductor";
    case ElementKind::capacitor: return "capacitor";
    case ElementKind::josephson: return "josephson";
  }
  return "?";
}

ElementKind element_kind_from_string(const std::string& s) {
  if (s == "resistor" || s == "R") return ElementKind::resistor;
  if (s == "inductor" || s == "L") return ElementKind::inductor;
  if (s == "capacitor" || s == "C") return ElementKind::capacitor;
  if (s == "josephson" || s == "B") return ElementKind::josephson;
  throw Error(ErrorCode::parse_error, "unknown element kind '" + s + "'");
}

Netlist::Netlist() {
  node_names_.push_back("gnd");
  node_index_["gnd"] = ground;
  node_index_["0"] = ground;
}

int Netlist::add_node(const std::string& name) {
  if (auto it = node_index_.find(name); it != node_index_.end()) return it->second;
  const int index = static_cast<int>(node_names_.size());
  node_names_.push_back(name);
  node_index_.emplace(name, index);
  return index;
}

int Netlist::find_node(const std::string& name) const {
  auto it = node_index_.find(name);
  return it == node_index_.end() ? -1 : it->second;
}

void Netlist::add_element(ElementKind kind, double value, int n1, int n2, std::string name) {
  const int n = static_cast<int>(node_names_.size());
  require(n1 >= 0 && n1 < n && n2 >= 0 && n2 < n, "element node index out of range");
  require(n1 != n2, "element '" + name + "' is shorted onto a single node");
  elements_.push_back({kind, value, n1, n2, std::move(name)});
}

void Netlist::add_port(int node, double z0, std::string name) {
  require(node > 0 && node < static_cast<int>(node_names_.size()),
          "port must reference a non-ground node");
  require(std::isfinite(z0) && z0 > 0.0, "port reference impedance must be positive");
  if (name.empty()) name = std::to_string(ports_.size() + 1);
  ports_.push_back({node, z0, std::move(name)});
}

std::size_t Netlist::junction_count() const {
  return static_cast<std::size_t>(std::count_if(
      elements_.begin(), elements_.end(),
      [](const Element& e) { return e.kind == ElementKind::josephson; }));
}

void Netlist::validate() const {
  for (const auto& e : elements_) {
    require(std::isfinite(e.value) && e.value > 0.0,
            "element '" + e.name + "' must have a positive finite value");
  }
  require(!ports_.empty(), "netlist has no ports");
  require(std::isfinite(loss_tangent) && loss_tangent >= 0.0, "loss tangent must be >= 0");

  std::vector<int> parent(node_names_.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : elements_) parent[find(e.n1)] = find(e.n2);
  for (const auto& p : ports_) {
    require(find(p.node) == find(ground),
            "port " + p.name + " (node '" + node_names_[p.node] + "') has no path to ground");
  }
}

std::vector<int> merge_into(Netlist& dst, const Netlist& src, const std::string& prefix,
                            const std::unordered_map<int, int>& aliases) {
  std::vector<int> map(src.node_count());
  map[Netlist::ground] = Netlist::ground;
  for (int i = 1; i < static_cast<int>(src.node_count()); ++i) {
    if (auto it = aliases.find(i); it != aliases.end()) {
      map[i] = it->second;
    } else {
      map[i] = dst.add_node(prefix + src.node_name(i));
    }
  }
  for (const auto& e : src.elements()) {
    if (map[e.n1] == map[e.n2]) continue;  // collapsed by aliasing
    dst.add_element(e.kind, e.value, map[e.n1], map[e.n2], prefix + e.name);
  }
  return map;
}

nlohmann::json to_json(const Netlist& netlist) {
  using nlohmann::json;
  json doc;
  json nodes = json::array();
  for (std::size_t i = 1; i < netlist.node_count(); ++i) nodes.push_back(netlist.node_name(i));
  doc["nodes"] = nodes;
  json elements = json::array();
  for (const auto& e : netlist.elements()) {
    json je{{"kind", to_string(e.kind)},
            {"n1", netlist.node_name(e.n1)},
            {"n2", netlist.node_name(e.n2)}};
    if (e.kind == ElementKind::josephson) {
      je["ic_amp"] = e.value;
    } else {
      je["value"] = e.value;
    }
    if (!e.name.empty()) je["name"] = e.name;
    elements.push_back(std::move(je));
  }
  doc["elements"] = elements;
  json ports = json::array();
  for (const auto& p : netlist.ports()) {
    ports.push_back({{"node", netlist.node_name(p.node)}, {"z0", p.z0}, {"name", p.name}});
  }
  doc["ports"] = ports;
  doc["loss_tangent"] = netlist.loss_tangent;
  return doc;
}

Netlist netlist_from_json(const nlohmann::json& doc) {
  try {
    Netlist net;
    if (doc.contains("nodes")) {
      for (const auto& n : doc.at("nodes")) net.add_node(n.get<std::string>());
    }
    auto node_of = [&](const nlohmann::json& j) {
      return j.is_number_integer() ? net.add_node(std::to_string(j.get<int>()))
                                   : net.add_node(j.get<std::string>());
    };
    for (const auto& je : doc.at("elements")) {
      const auto kind = element_kind_from_string(je.at("kind").get<std::string>());
      const double value = kind == ElementKind::josephson && je.contains("ic_amp")
                               ? je.at("ic_amp").get<double>()
                               : je.at("value").get<double>();
      net.add_element(kind, value, node_of(je.at("n1")), node_of(je.at("n2")),
                      je.value("name", std::string{}));
    }
    for (const auto& jp : doc.at("ports")) {
      net.add_port(node_of(jp.at("node")), jp.at("z0").get<double>(),
                   jp.value("name", std::string{}));
    }
    net.loss_tangent = doc.value("loss_tangent", 0.0);
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("netlist document: ") + e.what());
  }
}

}  // namespace dtwpa
