#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace dtwpa {

enum class ElementKind { resistor, inductor, capacitor, josephson };
enum class Orientation { series, shunt };

const char* to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& s);

/// Two-terminal branch. `value` is ohm, henry or farad; for a Josephson
/// junction it is the critical current in ampere.
struct Element {
  ElementKind kind;
  double value;
  int n1;
  int n2;
  std::string name;
};

/// A port is a node referenced to ground through a real reference impedance.
struct Port {
  int node;
  double z0;
  std::string name;
};

/// Node-element graph. Node 0 is ground and always exists; other nodes are
/// created on demand by name. Netlists are plain values: copy them freely.
class Netlist {
 public:
  static constexpr int ground = 0;

  Netlist();

  int add_node(const std::string& name);
  /// Index of an existing node, or -1.
  int find_node(const std::string& name) const;
  const std::string& node_name(int index) const { return node_names_.at(index); }
  std::size_t node_count() const { return node_names_.size(); }

  void add_element(ElementKind kind, double value, int n1, int n2, std::string name = {});
  void add_resistor(int n1, int n2, double ohm, std::string name = {}) {
    add_element(ElementKind::resistor, ohm, n1, n2, std::move(name));
  }
  void add_inductor(int n1, int n2, double henry, std::string name = {}) {
    add_element(ElementKind::inductor, henry, n1, n2, std::move(name));
  }
  void add_capacitor(int n1, int n2, double farad, std::string name = {}) {
    add_element(ElementKind::capacitor, farad, n1, n2, std::move(name));
  }
  void add_josephson(int n1, int n2, double critical_current, std::string name = {}) {
    add_element(ElementKind::josephson, critical_current, n1, n2, std::move(name));
  }
  void add_port(int node, double z0, std::string name = {});

  const std::vector<Element>& elements() const { return elements_; }
  std::vector<Element>& elements() { return elements_; }
  const std::vector<Port>& ports() const { return ports_; }
  std::size_t port_count() const { return ports_.size(); }
  std::size_t junction_count() const;
  bool has_junctions() const { return junction_count() > 0; }

  /// Dielectric loss tangent applied to every capacitor in frequency-domain
  /// analysis as a parallel conductance w*C*tan_delta. Zero means lossless.
  double loss_tangent = 0.0;

  /// Throws if any element value is non-positive or non-finite, a port sits on
  /// ground, or a port node has no element path to ground.
  void validate() const;

 private:
  std::vector<std::string> node_names_;
  std::unordered_map<std::string, int> node_index_;
  std::vector<Element> elements_;
  std::vector<Port> ports_;
};

/// Copies every node, element and port of `src` into `dst` with node names
/// prefixed by `prefix`. Nodes listed in `aliases` (source node -> existing
/// destination node) are merged instead of copied. Ports are not copied;
/// the returned vector maps each source node index to its destination index.
std::vector<int> merge_into(Netlist& dst, const Netlist& src, const std::string& prefix,
                            const std::unordered_map<int, int>& aliases = {});

// Netlist document: {"nodes": [...], "elements": [{"kind","value","n1","n2"}],
// "ports": [{"node","z0"}], "loss_tangent": 0}. Josephson elements use
// kind "josephson" and carry "ic_amp" instead of "value".
nlohmann::json to_json(const Netlist& netlist);
Netlist netlist_from_json(const nlohmann::json& doc);

}  // namespace dtwpa
