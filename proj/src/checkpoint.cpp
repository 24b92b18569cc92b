#include "nerfmir/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace nerfmir {

using nlohmann::json;

namespace {

json layer_to_json(const Linear<double>& l) {
  return json{{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}};
}

Linear<double> layer_from_json(const json& j) {
  Linear<double> l(j.at("in").get<int>(), j.at("out").get<int>());
  l.w = j.at("w").get<std::vector<double>>();
  l.b = j.at("b").get<std::vector<double>>();
  if (l.w.size() != static_cast<std::size_t>(l.in) * l.out ||
      l.b.size() != static_cast<std::size_t>(l.out)) {
    throw ValidationError("checkpoint: layer shape mismatch");
  }
  return l;
}

json mlp_to_json(const Mlp<double>& m) {
  json layers = json::array();
  m.for_each_layer([&](const Linear<double>& l) { layers.push_back(layer_to_json(l)); });
  return json{{"layers", layers}};
}

Mlp<double> mlp_from_json(const json& j, const EncodingConfig& enc, int width) {
  Mlp<double> m(enc, width);
  const auto& layers = j.at("layers");
  if (layers.size() != 6) throw ValidationError("checkpoint: expected six layers");
  int i = 0;
  m.for_each_layer([&](Linear<double>& l) {
    Linear<double> parsed = layer_from_json(layers.at(i++));
    if (parsed.in != l.in || parsed.out != l.out)
      throw ValidationError("checkpoint: layer shape does not match the config");
    l = std::move(parsed);
  });
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  json doc;
  doc["format"] = "nerfmir-checkpoint-v1";
  doc["encoding"] = {{"l_pos", cp.encoding.l_pos}, {"l_dir", cp.encoding.l_dir}};
  doc["width"] = cp.width;
  doc["precision"] = cp.precision == Precision::f32 ? "f32" : "f64";
  doc["train_step"] = cp.train_step;
  doc["coarse"] = mlp_to_json(cp.coarse);
  doc["fine"] = mlp_to_json(cp.fine);
  doc["optimizer"] = {
      {"step", cp.opt_coarse.step},
      {"beta1", cp.opt_coarse.beta1},
      {"beta2", cp.opt_coarse.beta2},
      {"eps", cp.opt_coarse.eps},
      {"coarse_m", mlp_to_json(cp.opt_coarse.m)},
      {"coarse_v", mlp_to_json(cp.opt_coarse.v)},
      {"fine_m", mlp_to_json(cp.opt_fine.m)},
      {"fine_v", mlp_to_json(cp.opt_fine.v)},
      {"fine_step", cp.opt_fine.step},
  };

  std::ofstream out(path);
  if (!out) throw IoError("save_checkpoint: cannot write " + path.string());
  out << doc.dump() << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_checkpoint: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("load_checkpoint: bad file " + path.string() + ": " + e.what());
  }

  try {
    if (doc.at("format").get<std::string>() != "nerfmir-checkpoint-v1")
      throw ValidationError("load_checkpoint: unknown format in " + path.string());

    Checkpoint cp;
    cp.encoding.l_pos = doc.at("encoding").at("l_pos").get<int>();
    cp.encoding.l_dir = doc.at("encoding").at("l_dir").get<int>();
    cp.width = doc.at("width").get<int>();
    cp.precision =
        doc.at("precision").get<std::string>() == "f64" ? Precision::f64 : Precision::f32;
    cp.train_step = doc.at("train_step").get<long long>();
    cp.coarse = mlp_from_json(doc.at("coarse"), cp.encoding, cp.width);
    cp.fine = mlp_from_json(doc.at("fine"), cp.encoding, cp.width);

    const auto& opt = doc.at("optimizer");
    for (AdamState<double>* st : {&cp.opt_coarse, &cp.opt_fine}) {
      st->beta1 = opt.at("beta1").get<double>();
      st->beta2 = opt.at("beta2").get<double>();
      st->eps = opt.at("eps").get<double>();
    }
    cp.opt_coarse.step = opt.at("step").get<long long>();
    cp.opt_fine.step = opt.at("fine_step").get<long long>();
    cp.opt_coarse.m = mlp_from_json(opt.at("coarse_m"), cp.encoding, cp.width);
    cp.opt_coarse.v = mlp_from_json(opt.at("coarse_v"), cp.encoding, cp.width);
    cp.opt_fine.m = mlp_from_json(opt.at("fine_m"), cp.encoding, cp.width);
    cp.opt_fine.v = mlp_from_json(opt.at("fine_v"), cp.encoding, cp.width);
    return cp;
  } catch (const json::exception& e) {
    throw IoError("load_checkpoint: bad file " + path.string() + ": " + e.what());
  }
}

}  // namespace nerfmir
