#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "idcrn/checkpoint.hpp"
#include "idcrn/dataset_io.hpp"
#include "idcrn/serialization.hpp"
#include "support/fixtures.hpp"

using namespace idcrn;
namespace fs = std::filesystem;
using idcrn::testing::random_graph;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("idcrn_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("bundle round trip in text and binary form") {
    Rng rng(1);
    const Graph g = random_graph(12, 3, 0.3, rng, 3);
    for (bool binary : {false, true}) {
      const fs::path dir = scratch(binary ? "bin" : "csv");
      save_bundle(g, dir, BundleWriteOptions{.binary_features = binary});
      CHECK(fs::exists(dir / (binary ? "features.bin" : "features.csv")));
      const Graph h = load_bundle(dir);
      CHECK(h.features() == g.features());
      CHECK(h.edges() == g.edges());
      CHECK(h.labels() == g.labels());
      fs::remove_all(dir);
    }
  }

  TEST_CASE("float32 features default") {
    const fs::path dir = scratch("f32");
    write_text(dir / "meta", "N 2\nD 2\nC 2\n");
    const float values[] = {1.5f, -2.0f, 0.25f, 3.0f};
    std::ofstream(dir / "features.bin", std::ios::binary).write(reinterpret_cast<const char*>(values), sizeof values);
    write_text(dir / "edges.csv", "0,1\n");
    write_text(dir / "labels.csv", "0\n1\n");
    const Graph g = load_bundle(dir);
    CHECK(g.features()(0, 1) == -2.0);
    CHECK(g.features()(1, 0) == 0.25);
    CHECK(g.edges().size() == 1);
    fs::remove_all(dir);
  }

  TEST_CASE("bundle errors") {
    const fs::path dir = scratch("bad");
    CHECK_THROWS(load_bundle(dir));
    write_text(dir / "meta", "N 2\nD 1\nC 2\n");
    write_text(dir / "features.csv", "1\n2\n");
    write_text(dir / "edges.csv", "0,4\n");
    CHECK_THROWS(load_bundle(dir));
    write_text(dir / "edges.csv", "0,1\n");
    write_text(dir / "features.csv", "1\n");
    CHECK_THROWS(load_bundle(dir));
    fs::remove_all(dir);
  }

  TEST_CASE("npy round trip") {
    const fs::path dir = scratch("npy");
    npy::write(dir / "a.npy", {2, 3}, {1, 2, 3, 4, 5, 6.5});
    const auto a = npy::read(dir / "a.npy");
    CHECK(a.shape == std::vector<Index>{2, 3});
    CHECK(a.data == std::vector<double>{1, 2, 3, 4, 5, 6.5});
    npy::write(dir / "b.npy", {4}, {3, 1, 4, 1}, true);
    CHECK(npy::read(dir / "b.npy").data == std::vector<double>{3, 1, 4, 1});
    write_text(dir / "c.npy", "not numpy");
    CHECK_THROWS(npy::read(dir / "c.npy"));
    fs::remove_all(dir);
  }

  TEST_CASE("convert npy layout") {
    const fs::path src = scratch("conv_src"), dst = scratch("conv_dst");
    npy::write(src / "toy_feat.npy", {3, 2}, {1, 0, 0, 1, 1, 1});
    npy::write(src / "toy_adj.npy", {3, 3}, {0, 1, 0, 1, 0, 1, 0, 1, 0});
    npy::write(src / "toy_label.npy", {3}, {4, 7, 4}, true);
    const Graph g = convert_public_bundle(src, "toy", dst);
    CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}});
    CHECK(*g.labels() == Labels{0, 1, 0});
    CHECK(g.num_classes() == 2);
    const Graph h = load_bundle(dst);
    CHECK(h.features() == g.features());
    CHECK(h.edges() == g.edges());
    fs::remove_all(src);
    fs::remove_all(dst);
  }

  TEST_CASE("convert edge-list and text layouts") {
    const fs::path src = scratch("conv_src2"), dst = scratch("conv_dst2");
    fs::create_directories(src / "data");
    npy::write(src / "data" / "e_feat.npy", {3, 1}, {1, 2, 3});
    npy::write(src / "data" / "e_edges.npy", {2, 2}, {0, 2, 2, 1}, true);
    npy::write(src / "data" / "e_label.npy", {3}, {0, 1, 1}, true);
    CHECK(convert_public_bundle(src, "e", dst).edges() == std::vector<Edge>{{0, 2}, {1, 2}});

    fs::create_directories(src / "graph");
    write_text(src / "data" / "t.txt", "1 0\n0 1\n1 1\n0 0\n");
    write_text(src / "data" / "t_label.txt", "2\n2\n0\n0\n");
    write_text(src / "graph" / "t_graph.txt", "0 1\n2 3\n1 0\n");
    const Graph t = convert_public_bundle(src, "t", dst);
    CHECK(t.num_nodes() == 4);
    CHECK(t.edges() == std::vector<Edge>{{0, 1}, {2, 3}});
    CHECK(*t.labels() == Labels{1, 1, 0, 0});
    CHECK_THROWS(convert_public_bundle(src, "missing", dst));
    fs::remove_all(src);
    fs::remove_all(dst);
  }

  TEST_CASE("checkpoint round trip") {
    EncoderConfig cfg;
    cfg.input_dim = 5;
    cfg.hidden_dims = {7, 4};
    cfg.latent_dim = 3;
    const EncoderState s = init_encoder(cfg, 42);
    const fs::path dir = scratch("ckpt");
    save_checkpoint(s, dir / "model.ckpt");
    const EncoderState t = load_checkpoint(dir / "model.ckpt");
    CHECK(t.config.hidden_dims == cfg.hidden_dims);
    const auto a = s.parameters();
    const auto b = t.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    CHECK(parameter_hash(s) == parameter_hash(t));

    const std::string manifest = slurp(dir / "model.ckpt.manifest");
    CHECK(manifest.find("graph.0.weight 5x7") != std::string::npos);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(parameter_hash(s)));
    CHECK(manifest.find(hex) != std::string::npos);

    std::string bytes = slurp(dir / "model.ckpt");
    bytes[0] = 'X';
    write_text(dir / "bad.ckpt", bytes);
    CHECK_THROWS(load_checkpoint(dir / "bad.ckpt"));
    write_text(dir / "short.ckpt", slurp(dir / "model.ckpt").substr(0, 40));
    CHECK_THROWS(load_checkpoint(dir / "short.ckpt"));
    fs::remove_all(dir);
  }

  TEST_CASE("hash changes with parameters") {
    EncoderConfig cfg;
    cfg.input_dim = 3;
    EncoderState s = init_encoder(cfg, 1);
    const auto h = parameter_hash(s);
    s.decoder[0].bias(0, 0) += 1e-12;
    CHECK(parameter_hash(s) != h);
  }

  TEST_CASE("config json round trip") {
    TrainConfig cfg;
    cfg.learning_rate = 3e-4;
    cfg.seed = 99;
    cfg.flags.use_preg = false;
    cfg.flags.sample_target = SampleTarget::kIdentity;
    cfg.hidden_dims = {64, 32};
    cfg.readout = ReadoutMode::kRandomPartition;
    const TrainConfig back = config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(config_from_json(nlohmann::json{{"lambda", 2.0}}).lambda == 2.0);
    CHECK_THROWS(config_from_json(nlohmann::json{{"sample_target", "other"}}));
  }

  TEST_CASE("metrics file is byte-stable") {
    const fs::path dir = scratch("metrics");
    TrainConfig cfg;
    const std::vector<ClusteringScores> runs{{0.9, 0.8, 0.7, 0.6}, {0.1 + 0.2, 1.0 / 3.0, 0.5, 0.25}};
    write_metrics(dir / "a.json", cfg, {0, 1}, runs);
    write_metrics(dir / "b.json", cfg, {0, 1}, runs);
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
    const auto j = nlohmann::json::parse(slurp(dir / "a.json"));
    CHECK(j["runs"][1]["acc"].get<double>() == 0.1 + 0.2);
    CHECK(j["nmi"]["mean"].get<double>() == doctest::Approx((0.8 + 1.0 / 3.0) / 2));
    fs::remove_all(dir);
  }

  TEST_CASE("epoch log and predictions") {
    const fs::path dir = scratch("logs");
    write_epoch_log({EpochLog{"finetune", 0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0}, EpochLog{"finetune", 1}}, dir / "r.jsonl");
    std::ifstream in(dir / "r.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j["epoch"].get<int>() == lines);
      ++lines;
    }
    CHECK(lines == 2);
    write_predictions({2, 0, 1}, dir / "p.csv");
    CHECK(slurp(dir / "p.csv") == "node,cluster\n0,2\n1,0\n2,1\n");
    CHECK(read_labels(dir / "p.csv") == Labels{2, 0, 1});
    write_text(dir / "plain.txt", "3\n1\n\n2\n");
    CHECK(read_labels(dir / "plain.txt") == Labels{3, 1, 2});
    write_text(dir / "bad.txt", "1\nx\n");
    CHECK_THROWS(read_labels(dir / "bad.txt"));
    fs::remove_all(dir);
  }
}
