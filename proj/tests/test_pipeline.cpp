#include "doctest.h"

#include <fstream>
#include <sstream>

#include "adacast/error.hpp"
#include "adacast/metrics.hpp"
#include "adacast/pipeline.hpp"
#include "support.hpp"

using namespace adacast;

namespace {

ExperimentConfig small_config(const std::filesystem::path& out) {
  ExperimentConfig cfg;
  cfg.width = 32;
  cfg.height = 32;
  cfg.frames = 4;
  cfg.gop = 2;
  cfg.rates = {2000, 3000};
  cfg.csnr_db = {10.0, 20.0};
  cfg.recon.max_iterations = 20;
  cfg.out = out;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Sent {
  VideoSequence source;
  StreamHeader header;
  std::vector<PacketBatch> received;
};

Sent send(const ExperimentConfig& cfg, long long rate, double csnr_db, bool noiseless) {
  Sent s;
  s.source = load_input(cfg);
  const auto encoded = encode_sequence(s.source, encoder_settings(cfg, rate));
  s.header = stream_header(encoded);
  auto channel = channel_settings(cfg, csnr_db);
  channel.noiseless = noiseless;
  for (const auto& t : transmit_sequence(packetize_sequence(encoded), channel)) s.received.push_back(t.received);
  return s;
}

}  // namespace

TEST_CASE("config JSON") {
  ExperimentConfig cfg;
  cfg.rates = {1000, 2000};
  cfg.recon.similar_blocks = 7;
  cfg.init = InitMode::BackProjection;
  cfg.scaling = ScalingMode::Amplitude;
  cfg.loss_rate = 0.25;
  const auto doc = to_json(cfg);
  CHECK(doc.at("knn") == 7);
  CHECK(doc.at("init") == "back-projection");
  CHECK(to_json(config_from_json(doc)) == doc);

  const auto partial = config_from_json(nlohmann::json{{"frames", 9}, {"csnr-db", {5.0}}});
  CHECK(partial.frames == 9);
  CHECK(partial.csnr_db == std::vector<double>{5.0});
  CHECK(partial.width == 128);

  for (const auto& bad : {nlohmann::json{{"frame", 9}}, nlohmann::json{{"frames", "nine"}}, nlohmann::json::array()}) {
    try {
      config_from_json(bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
  ExperimentConfig odd;
  odd.recon.wiener_window = 4;
  CHECK_THROWS_AS(odd.validate(), Error);
  CHECK_THROWS_AS(load_config("/nonexistent/adacast.json"), Error);
}

TEST_CASE("stream header round trip") {
  const auto cfg = small_config("unused");
  const auto encoded = encode_sequence(load_input(cfg), encoder_settings(cfg, 2500));
  const auto header = stream_header(encoded);
  CHECK(header.overhead == overhead_samples(4, 16, 64));
  CHECK(header.frames[1].kind == FrameKind::Residual);
  CHECK(header.frames[2].kind == FrameKind::Intra);
  long long total = 0;
  for (const auto& f : header.frames)
    for (int m : f.counts) total += m;
  CHECK(total == 2500 - header.overhead);

  const auto back = stream_header_from_json(to_json(header));
  CHECK(to_json(back) == to_json(header));
  auto broken = to_json(header);
  broken["frames"][0]["counts"].erase(0);
  CHECK_THROWS_AS(stream_header_from_json(broken), Error);
}

TEST_CASE("noiseless full-rate decode reproduces the source") {
  const auto cfg = small_config("unused");
  const long long full = 4 * 16 * 64 + overhead_samples(4, 16, 64);
  const auto s = send(cfg, full, 20.0, true);
  for (auto method : {DecodeMethod::Proposed, DecodeMethod::BcsSpl}) {
    const auto result = decode_sequence(s.header, s.received, decoder_settings(cfg, method));
    for (int i = 0; i < 4; ++i)
      for (std::size_t k = 0; k < s.source.frames[i].size(); ++k)
        CHECK(std::abs(result.video.frames[i].plane[k] - s.source.frames[i].plane[k]) < 1e-4);
  }
}

TEST_CASE("lost packets and concealment") {
  const auto cfg = small_config("unused");
  auto s = send(cfg, 3000, 20.0, false);
  s.received[1].packets[0].erased = true;
  for (auto& p : s.received[2].packets) p.erased = true;
  const auto result = decode_sequence(s.header, s.received, decoder_settings(cfg, DecodeMethod::Proposed));
  CHECK(result.concealed == std::vector<bool>{false, false, true, false});
  CHECK(result.max_block_loss[0] == 0);
  CHECK(result.max_block_loss[1] == 1);
  CHECK(result.video.frames[2] == result.video.frames[1]);

  for (auto& p : s.received[0].packets) p.erased = true;
  const auto first = decode_sequence(s.header, s.received, decoder_settings(cfg, DecodeMethod::BcsSpl));
  CHECK(first.concealed[0]);
  for (double v : first.video.frames[0].plane) CHECK(v == 128.0);
}

TEST_CASE("static scene favours the adaptive decoder") {
  auto cfg = small_config("unused");
  cfg.width = 64;
  cfg.height = 64;
  cfg.frames = 5;
  cfg.gop = 5;
  cfg.synth.velocity_x = 0;
  cfg.synth.velocity_y = 0;
  cfg.recon.max_iterations = 40;
  const auto s = send(cfg, 5 * 64 * 20 + overhead_samples(5, 64, 64), 25.0, false);
  const auto adaptive = decode_sequence(s.header, s.received, decoder_settings(cfg, DecodeMethod::Proposed));
  const auto fixed = decode_sequence(s.header, s.received, decoder_settings(cfg, DecodeMethod::BcsSpl));
  CHECK(mean_psnr(s.source, adaptive.video) > mean_psnr(s.source, fixed.video));
}

TEST_CASE("simulate") {
  const auto dir = testing::scratch_dir("simulate");
  auto cfg = small_config(dir / "a");
  const auto rows = run_simulate(cfg);
  CHECK(rows.size() == 8);
  for (const auto& r : rows) {
    CHECK(r.psnr_db > 10.0);
    CHECK(r.ms_ssim > 0.0);
    CHECK(r.ms_ssim <= 1.0);
  }
  const auto cell = dir / "a" / "rate-2000_csnr-10";
  CHECK(std::filesystem::exists(cell / "alloc.csv"));
  CHECK(std::filesystem::file_size(cell / "proposed" / "recon.yuv") == 4 * 32 * 32 * 3 / 2);
  CHECK(std::filesystem::exists(cell / "bcs-spl" / "trace.csv"));

  cfg.out = dir / "b";
  cfg.jobs = 3;
  run_simulate(cfg);
  CHECK(slurp(dir / "a" / "report.csv") == slurp(dir / "b" / "report.csv"));

  const auto back = read_report_csv(dir / "a" / "report.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(back[k].method == rows[k].method);
    CHECK(back[k].rate == rows[k].rate);
    CHECK(back[k].psnr_db == doctest::Approx(rows[k].psnr_db).epsilon(1e-6));
  }

  cfg.out = dir / "c";
  cfg.rates = {500};
  try {
    run_simulate(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Budget);
    CHECK(std::string(e.what()).find("rate-control") != std::string::npos);
  }
  CHECK(std::filesystem::exists(dir / "c" / "report.csv"));
}

TEST_CASE("report table") {
  std::vector<ReportRow> rows;
  const std::vector<double> q = {20, 22, 23, 23.5};
  for (int k = 0; k < 4; ++k)
    for (std::string m : {"proposed", "bcs-spl"})
      rows.push_back({"clip", m, 1000LL * (k + 2), 25.0, q[k] - (m == "bcs-spl" ? 1.0 : 0.0), 0.8 + 0.01 * k, 0});
  const auto table = bd_table(rows);
  REQUIRE(table.size() == 1);
  CHECK(table[0].baseline == "proposed");
  CHECK(table[0].bd_psnr == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(std::abs(table[0].bd_ms_ssim) < 1e-9);

  std::stringstream csv;
  write_report_csv(csv, rows);
  const auto back = read_report_csv(csv);
  CHECK(back.size() == 8);
  CHECK(bd_table(back)[0].bd_psnr == doctest::Approx(-1.0).epsilon(1e-6));

  std::vector<ReportRow> single(rows.begin(), rows.end());
  std::erase_if(single, [](const ReportRow& r) { return r.method == "bcs-spl"; });
  try {
    bd_table(single);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Usage);
  }
  try {
    read_report_csv(std::filesystem::path("/nonexistent/report.csv"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}
