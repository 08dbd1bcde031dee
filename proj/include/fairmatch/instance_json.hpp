#ifndef FAIRMATCH_INSTANCE_JSON_HPP
#define FAIRMATCH_INSTANCE_JSON_HPP

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fairmatch/instance.hpp"

namespace fairmatch {

// Instance <-> JSON. One document, top-level keys `drivers`, `riders`,
// `edges`, `horizon`; nlohmann serializes doubles with enough digits to
// round-trip exactly.

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["drivers"] = nlohmann::json::array();
  for (const auto& d : inst.drivers)
    j["drivers"].push_back({{"id", d.id},
                            {"capacity", d.capacity},
                            {"attributes", d.attributes}});
  j["riders"] = nlohmann::json::array();
  for (const auto& r : inst.riders)
    j["riders"].push_back({{"id", r.id},
                           {"arrival_rate", r.arrival_rate},
                           {"patience", r.patience},
                           {"attributes", r.attributes}});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : inst.edges)
    j["edges"].push_back({{"id", e.id},
                          {"driver", e.driver},
                          {"rider", e.rider},
                          {"accept_prob", e.accept_prob},
                          {"weight", e.weight}});
  j["horizon"] = inst.horizon;
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  Instance inst;
  for (const auto& jd : j.at("drivers")) {
    DriverType d;
    d.id = jd.at("id").get<std::string>();
    d.capacity = jd.at("capacity").get<int>();
    if (jd.contains("attributes"))
      d.attributes = jd.at("attributes").get<std::map<std::string, std::string>>();
    inst.drivers.push_back(std::move(d));
  }
  for (const auto& jr : j.at("riders")) {
    RiderType r;
    r.id = jr.at("id").get<std::string>();
    r.arrival_rate = jr.at("arrival_rate").get<double>();
    r.patience = jr.at("patience").get<int>();
    if (jr.contains("attributes"))
      r.attributes = jr.at("attributes").get<std::map<std::string, std::string>>();
    inst.riders.push_back(std::move(r));
  }
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.id = je.at("id").get<std::string>();
    e.driver = je.at("driver").get<std::string>();
    e.rider = je.at("rider").get<std::string>();
    e.accept_prob = je.at("accept_prob").get<double>();
    e.weight = je.at("weight").get<double>();
    inst.edges.push_back(std::move(e));
  }
  inst.horizon = j.at("horizon").get<long>();
  return inst;
}

inline void save_instance(const std::string& path, const Instance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << instance_to_json(inst).dump(2) << '\n';
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return instance_from_json(j);
}

}  // namespace fairmatch

#endif  // FAIRMATCH_INSTANCE_JSON_HPP
