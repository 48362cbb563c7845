#pragma once

// Run manifests: everything needed to reproduce a command's random output.
// Stored as JSON; the run directory is named by a hash of the manifest with
// the timestamp left out, so replaying a manifest lands in the same place.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roughsheet/errors.hpp"
#include "roughsheet/grid.hpp"
#include "roughsheet/kernels.hpp"

namespace roughsheet {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string command;
  OperatorKind op = OperatorKind::Heat;
  double H = 0.25;
  std::size_t d = 1;
  GridSpec grid;
  std::string driftName = "none";
  std::vector<double> driftParams;
  std::vector<double> sigma = {1.0};
  std::size_t nReplicas = 1;
  std::uint64_t baseSeed = 0;
  std::map<std::string, double> tolerances;
  // command-specific settings (method, window, initial data, ...)
  nlohmann::json extra = nlohmann::json::object();
  std::string toolVersion = kToolVersion;
  std::string timestamp;

  nlohmann::json to_json(bool withTimestamp = true) const {
    nlohmann::json j;
    j["command"] = command;
    j["op"] = std::string(to_string(op));
    j["H"] = H;
    j["d"] = d;
    j["grid"] = {{"tMax", grid.tMax}, {"nT", grid.nT}, {"xMin", grid.xMin}, {"xMax", grid.xMax}, {"nX", grid.nX}};
    j["drift"] = {{"name", driftName}, {"params", driftParams}};
    j["sigma"] = sigma;
    j["nReplicas"] = nReplicas;
    j["baseSeed"] = baseSeed;
    j["tolerances"] = tolerances;
    j["extra"] = extra;
    j["toolVersion"] = toolVersion;
    if (withTimestamp) j["timestamp"] = timestamp;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    try {
      RunManifest m;
      m.command = j.at("command").get<std::string>();
      m.op = parse_operator(j.at("op").get<std::string>());
      m.H = j.at("H").get<double>();
      m.d = j.at("d").get<std::size_t>();
      const auto& g = j.at("grid");
      m.grid.tMax = g.at("tMax").get<double>();
      m.grid.nT = g.at("nT").get<std::size_t>();
      m.grid.xMin = g.at("xMin").get<double>();
      m.grid.xMax = g.at("xMax").get<double>();
      m.grid.nX = g.at("nX").get<std::size_t>();
      m.driftName = j.at("drift").at("name").get<std::string>();
      m.driftParams = j.at("drift").at("params").get<std::vector<double>>();
      m.sigma = j.at("sigma").get<std::vector<double>>();
      m.nReplicas = j.at("nReplicas").get<std::size_t>();
      m.baseSeed = j.at("baseSeed").get<std::uint64_t>();
      m.tolerances = j.at("tolerances").get<std::map<std::string, double>>();
      m.extra = j.value("extra", nlohmann::json::object());
      m.toolVersion = j.value("toolVersion", std::string(kToolVersion));
      m.timestamp = j.value("timestamp", std::string());
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("manifest: ") + e.what());
    }
  }

  /// FNV-1a over the canonical JSON without the timestamp, as 16 hex digits.
  std::string hash() const {
    const std::string canon = to_json(false).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
  }

  void stamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    timestamp = buf;
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write manifest " + path);
    os << to_json().dump(2) << '\n';
  }

  static RunManifest load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open manifest " + path);
    try {
      return from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("manifest: ") + e.what());
    }
  }
};

}  // namespace roughsheet
