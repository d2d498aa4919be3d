#include <fstream>
#include <json.hpp>
#include <sstream>

#include "crm/stimulus/corpus.hpp"
#include "crm/stimulus/manifest_json.hpp"

namespace crm::stimulus {

using nlohmann::json;

json trial_to_json(const TrialSpec& t) {
  json j;
  j["record"] = "trial";
  j["phase"] = to_string(t.phase);
  j["index"] = t.index;
  j["cell"] = t.cell;
  j["tmr_db"] = t.tmr.is_baseline() ? json(nullptr) : json(t.tmr.value_db());
  j["delta_f0_st"] = t.voice.delta_f0_st;
  j["delta_vtl_st"] = t.voice.delta_vtl_st;
  j["target_id"] = t.target_id();
  j["target_color"] = to_string(t.target.color);
  j["target_number"] = t.target.number;
  j["seed"] = t.seed;
  j["path"] = t.stimulus_path;
  return j;
}

TrialSpec trial_from_json(const json& j) {
  TrialSpec t;
  const std::string phase = j.at("phase").get<std::string>();
  if (phase == "training") {
    t.phase = TrialPhase::training;
  } else if (phase == "experiment") {
    t.phase = TrialPhase::experiment;
  } else {
    throw StimulusError("manifest: unknown phase '" + phase + "'");
  }
  t.index = j.at("index").get<int>();
  t.cell = j.at("cell").get<int>();
  t.tmr = j.at("tmr_db").is_null() ? TmrCondition::baseline()
                                    : TmrCondition::db(j.at("tmr_db").get<double>());
  t.voice = {j.at("delta_f0_st").get<double>(), j.at("delta_vtl_st").get<double>()};
  const auto color = parse_color(j.at("target_color").get<std::string>());
  if (!color) throw StimulusError("manifest: bad target colour");
  t.target = Keywords{*color, j.at("target_number").get<int>()};
  if (!is_valid_number(t.target.number)) throw StimulusError("manifest: bad target number");
  t.seed = j.at("seed").get<std::uint64_t>();
  t.stimulus_path = j.at("path").get<std::string>();
  return t;
}

std::string manifest_to_jsonl(const Manifest& m) {
  std::ostringstream out;
  json header;
  header["record"] = "header";
  header["schema"] = "crm.manifest";
  header["version"] = kManifestVersion;
  header["seed"] = m.seed;
  header["sample_rate"] = m.sample_rate;
  header["presentation_level_dbfs"] = m.presentation_level_dbfs;
  header["training_trials"] = m.training.size();
  header["experiment_trials"] = m.experiment.size();
  out << header.dump() << '\n';
  for (const auto& t : m.training) out << trial_to_json(t).dump() << '\n';
  for (const auto& t : m.experiment) out << trial_to_json(t).dump() << '\n';
  return out.str();
}

Manifest manifest_from_jsonl(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      const std::string kind = j.at("record").get<std::string>();
      if (kind == "header") {
        if (j.at("schema").get<std::string>() != "crm.manifest") throw StimulusError("not a manifest");
        if (j.at("version").get<int>() != kManifestVersion) {
          throw StimulusError("unsupported manifest version " + std::to_string(j.at("version").get<int>()));
        }
        m.seed = j.at("seed").get<std::uint64_t>();
        m.sample_rate = j.at("sample_rate").get<int>();
        m.presentation_level_dbfs = j.at("presentation_level_dbfs").get<double>();
        have_header = true;
      } else if (kind == "trial") {
        TrialSpec t = trial_from_json(j);
        (t.phase == TrialPhase::training ? m.training : m.experiment).push_back(std::move(t));
      }
    } catch (const json::exception& e) {
      throw StimulusError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw StimulusError("manifest has no header record");
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StimulusError("cannot write manifest " + path.string());
  out << manifest_to_jsonl(manifest);
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StimulusError("manifest not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_jsonl(ss.str());
}

}  // namespace crm::stimulus
