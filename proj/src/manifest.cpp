#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slab/error.hpp"
#include "slab/pipeline.hpp"

namespace slab {

using nlohmann::json;

namespace {

[[noreturn]] void bad_manifest(const std::string& msg) {
    throw FormatError(FormatFault::bad_field, "manifest: " + msg);
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "gelu") return Activation::gelu;
    if (s == "identity") return Activation::identity;
    bad_manifest("unknown activation '" + s + "' (relu|gelu|identity)");
}

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
    case Activation::identity: return "identity";
    }
    return "identity";
}

std::size_t positive(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number_unsigned() || j[key].get<std::size_t>() == 0)
        bad_manifest(where + ": '" + key + "' must be a positive integer");
    return j[key].get<std::size_t>();
}

}  // namespace

ModelManifest ModelManifest::parse(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad_manifest(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) bad_manifest("top level must be an object");

    ModelManifest m;
    if (!j.contains("tensor_file") || !j["tensor_file"].is_string()) bad_manifest("missing 'tensor_file'");
    m.tensor_file = j["tensor_file"].get<std::string>();
    if (m.tensor_file.is_relative() && !base_dir.empty()) m.tensor_file = base_dir / m.tensor_file;

    if (!j.contains("input_spec") || !j["input_spec"].is_object()) bad_manifest("missing 'input_spec'");
    const auto& in = j["input_spec"];
    m.input_d_in = positive(in, "d_in", "input_spec");
    if (in.contains("calibration_ref")) m.calibration_ref = in["calibration_ref"].get<std::string>();
    if (j.contains("calibration_source") && j["calibration_source"].is_string())
        m.calibration_source = j["calibration_source"].get<std::string>();

    if (!j.contains("layers") || !j["layers"].is_array()) bad_manifest("missing 'layers' array");
    std::set<std::string> names;
    for (const auto& lj : j["layers"]) {
        LayerSpec l;
        if (!lj.contains("name") || !lj["name"].is_string()) bad_manifest("layer without a name");
        l.name = lj["name"].get<std::string>();
        if (!names.insert(l.name).second) bad_manifest("duplicate layer name '" + l.name + "'");
        const std::string kind = lj.value("kind", "");
        if (kind == "linear") {
            l.kind = LayerKind::linear;
            l.d_out = positive(lj, "d_out", l.name);
            l.d_in = positive(lj, "d_in", l.name);
            if (!lj.contains("weight_ref") || !lj["weight_ref"].is_string())
                bad_manifest(l.name + ": missing 'weight_ref'");
            l.weight_ref = lj["weight_ref"].get<std::string>();
        } else if (kind == "elementwise") {
            l.kind = LayerKind::elementwise;
            l.activation = parse_activation(lj.value("activation", "identity"));
        } else {
            bad_manifest(l.name + ": kind must be 'linear' or 'elementwise'");
        }
        m.layers.push_back(std::move(l));
    }
    return m;
}

ModelManifest ModelManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open manifest '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.parent_path());
}

std::string ModelManifest::to_json() const {
    json j;
    j["tensor_file"] = tensor_file.string();
    j["input_spec"]["d_in"] = input_d_in;
    if (calibration_ref) j["input_spec"]["calibration_ref"] = *calibration_ref;
    if (calibration_source) j["calibration_source"] = *calibration_source;
    j["layers"] = json::array();
    for (const auto& l : layers) {
        json lj;
        lj["name"] = l.name;
        if (l.kind == LayerKind::linear) {
            lj["kind"] = "linear";
            lj["d_out"] = l.d_out;
            lj["d_in"] = l.d_in;
            lj["weight_ref"] = l.weight_ref;
        } else {
            lj["kind"] = "elementwise";
            lj["activation"] = activation_name(l.activation);
        }
        j["layers"].push_back(lj);
    }
    return j.dump(2);
}

void ModelManifest::check_chain() const {
    std::size_t width = input_d_in;
    std::string prev = "input";
    for (const auto& l : layers) {
        if (l.kind != LayerKind::linear) continue;
        if (l.d_in != width)
            throw Error(ErrorKind::chain_violation, "layer '" + l.name + "' has d_in " + std::to_string(l.d_in) +
                                                        " but '" + prev + "' produces " + std::to_string(width));
        width = l.d_out;
        prev = l.name;
    }
}

std::vector<std::string> ModelManifest::validate(const TensorFile& tf) const {
    check_chain();
    std::set<std::string> referenced;
    for (const auto& l : layers) {
        if (l.kind != LayerKind::linear) continue;
        const TensorEntry* e = tf.find(l.weight_ref);
        if (!e)
            throw Error(ErrorKind::missing_entry, "layer '" + l.name + "': weight '" + l.weight_ref +
                                                      "' not in tensor file");
        if (e->rows != l.d_out || e->cols != l.d_in)
            throw Error(ErrorKind::shape_mismatch, "layer '" + l.name + "': weight is " + std::to_string(e->rows) +
                                                       "x" + std::to_string(e->cols) + ", manifest says " +
                                                       std::to_string(l.d_out) + "x" + std::to_string(l.d_in));
        referenced.insert(l.weight_ref);
        if (const TensorEntry* a = tf.find(l.name + ".act")) {
            if (a->cols != l.d_in)
                throw Error(ErrorKind::shape_mismatch, "layer '" + l.name + "': activations have " +
                                                           std::to_string(a->cols) + " columns, expected " +
                                                           std::to_string(l.d_in));
            referenced.insert(a->name);
        }
    }
    if (calibration_ref) {
        const TensorEntry* c = tf.find(*calibration_ref);
        if (!c) throw Error(ErrorKind::missing_entry, "calibration entry '" + *calibration_ref + "' not in tensor file");
        if (c->cols != input_d_in)
            throw Error(ErrorKind::shape_mismatch, "calibration entry has " + std::to_string(c->cols) +
                                                       " columns, input d_in is " + std::to_string(input_d_in));
        referenced.insert(*calibration_ref);
    }

    std::vector<std::string> warnings;
    for (const auto& e : tf.entries())
        if (!referenced.count(e.name)) warnings.push_back("unreferenced tensor '" + e.name + "'");
    return warnings;
}

}  // namespace slab
