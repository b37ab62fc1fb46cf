// Command-line front end: encode / transmit / decode / simulate / report.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adacast/config.hpp"
#include "adacast/error.hpp"
#include "adacast/metrics.hpp"
#include "adacast/pipeline.hpp"

namespace fs = std::filesystem;
using namespace adacast;
using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::string> name, input, pattern, scaling, init;
  std::optional<std::uint64_t> content_seed, matrix_seed, channel_seed, noise_seed, loss_seed;
  std::optional<double> velocity_x, velocity_y, total_power, loss_rate, alpha, beta, gamma_f, eps;
  std::optional<int> width, height, frames, block_size, gop, m_min, subchannels, kmax, window, knn, neighborhood,
      wiener, jobs;
  std::vector<long long> rates;
  std::vector<double> csnr;
  std::vector<std::string> methods;
  std::optional<std::string> out;
  bool noiseless = false, residual_domain = false, trace = false, dump_alloc = false, dump_plan = false;
  bool complexity_on_frame = false, importance_on_residual = false;

  void add_source(CLI::App* app) {
    app->add_option("--name", name, "Sequence label used in reports");
    app->add_option("--input", input, "Raw .y or .yuv file");
    app->add_option("--pattern", pattern, "Synthetic clip when no input is given");
    app->add_option("--content-seed", content_seed);
    app->add_option("--velocity-x", velocity_x);
    app->add_option("--velocity-y", velocity_y);
    app->add_option("--width", width);
    app->add_option("--height", height);
    app->add_option("--frames", frames);
    app->add_option("--gop", gop);
  }
  void add_encoder(CLI::App* app) {
    app->add_option("--block-size", block_size);
    app->add_option("--m-min", m_min);
    app->add_option("--matrix-seed", matrix_seed);
    app->add_option("--alpha", alpha, "Texture weight");
    app->add_option("--beta", beta, "Saliency weight");
    app->add_option("--gamma-f", gamma_f, "Texture x saliency weight");
    app->add_flag("--complexity-on-frame", complexity_on_frame, "Measure P-frame complexity on F_i, not R_i");
    app->add_flag("--importance-on-residual", importance_on_residual, "Compute P-frame importance on R_i");
    app->add_flag("--dump-alloc", dump_alloc, "Write per-block sample counts");
  }
  void add_channel(CLI::App* app) {
    app->add_option("--total-power", total_power);
    app->add_option("--subchannels", subchannels);
    app->add_option("--loss-rate", loss_rate);
    app->add_option("--channel-seed", channel_seed);
    app->add_option("--noise-seed", noise_seed);
    app->add_option("--loss-seed", loss_seed);
    app->add_option("--scaling", scaling, "power or amplitude");
    app->add_flag("--noiseless", noiseless);
    app->add_flag("--dump-plan", dump_plan, "Write subchannel/power plan");
  }
  void add_decoder(CLI::App* app) {
    app->add_option("--kmax", kmax);
    app->add_option("--eps", eps);
    app->add_option("--window", window, "Similarity search window S");
    app->add_option("--knn", knn, "Similar blocks K");
    app->add_option("--neighborhood", neighborhood);
    app->add_option("--wiener", wiener);
    app->add_option("--init", init, "bcs-spl or back-projection");
    app->add_flag("--residual-domain", residual_domain);
  }

  void apply(ExperimentConfig& c) const {
    auto set = [](auto& target, const auto& value) {
      if (value) target = *value;
    };
    set(c.name, name);
    set(c.input, input);
    set(c.pattern, pattern);
    set(c.content_seed, content_seed);
    set(c.synth.velocity_x, velocity_x);
    set(c.synth.velocity_y, velocity_y);
    set(c.width, width);
    set(c.height, height);
    set(c.frames, frames);
    set(c.block_size, block_size);
    set(c.gop, gop);
    set(c.min_per_block, m_min);
    set(c.total_power, total_power);
    set(c.subchannels, subchannels);
    set(c.loss_rate, loss_rate);
    set(c.matrix_seed, matrix_seed);
    set(c.channel_seed, channel_seed);
    set(c.noise_seed, noise_seed);
    set(c.loss_seed, loss_seed);
    set(c.fusion.texture, alpha);
    set(c.fusion.saliency, beta);
    set(c.fusion.interaction, gamma_f);
    set(c.recon.max_iterations, kmax);
    set(c.recon.tolerance, eps);
    set(c.recon.search_window, window);
    set(c.recon.similar_blocks, knn);
    set(c.recon.neighborhood, neighborhood);
    set(c.recon.wiener_window, wiener);
    set(c.jobs, jobs);
    if (out) c.out = *out;
    if (scaling) c.scaling = parse_scaling_mode(*scaling);
    if (init) c.init = parse_init_mode(*init);
    if (!rates.empty()) c.rates = rates;
    if (!csnr.empty()) c.csnr_db = csnr;
    if (!methods.empty()) c.methods = methods;
    if (noiseless) c.noiseless = true;
    if (residual_domain) c.residual_domain = true;
    if (trace) c.trace = true;
    if (dump_alloc) c.dump_alloc = true;
    if (dump_plan) c.dump_plan = true;
    if (complexity_on_frame) c.complexity_on_residual = false;
    if (importance_on_residual) c.importance_on_original = false;
  }
};

ExperimentConfig resolve(const std::optional<std::string>& config_path, const Overrides& o) {
  ExperimentConfig cfg;
  if (config_path) cfg = load_config(*config_path);
  o.apply(cfg);
  cfg.validate();
  return cfg;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::CorruptStream, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  out << doc.dump(1) << '\n';
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::vector<PacketBatch> read_packets(const fs::path& path, const StreamHeader& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<PacketBatch> out;
  for (const auto& f : header.frames) {
    out.push_back(read_packet_dump(in, f.counts, header.packet_count()));
    if (out.back().frame_index != f.index) throw Error(ErrorKind::CorruptStream, "packet dump frame order");
  }
  return out;
}

// Block-resolution map blown up to frame size, scaled so the maximum is 255.
void write_pgm(const fs::path& path, const std::vector<double>& values, int blocks_x, int block_size) {
  const int blocks_y = static_cast<int>(values.size()) / blocks_x;
  const double top = *std::max_element(values.begin(), values.end());
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << blocks_x * block_size << ' ' << blocks_y * block_size << "\n255\n";
  for (int y = 0; y < blocks_y * block_size; ++y)
    for (int x = 0; x < blocks_x * block_size; ++x) {
      const double v = values[(y / block_size) * blocks_x + x / block_size];
      out.put(static_cast<char>(top > 0 ? std::lround(255 * v / top) : 0));
    }
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

void dump_importance(const fs::path& dir, const VideoSequence& video, const ExperimentConfig& cfg) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "importance.csv");
  csv << "frame,block,texture,saliency,importance\n";
  const int blocks_x = video.width() / cfg.block_size;
  for (int i = 0; i < video.frame_count(); ++i) {
    const bool residual = i % video.gop_length != 0 && !cfg.importance_on_original;
    const Frame& source = residual ? compute_residual(video.frames[i], video.frames[i - 1]) : video.frames[i];
    const auto maps = compute_importance(source, cfg.block_size, cfg.fusion);
    for (std::size_t j = 0; j < maps.importance.size(); ++j)
      csv << i << ',' << j << ',' << maps.texture[j] << ',' << maps.saliency[j] << ',' << maps.importance[j] << '\n';
    const std::string stem = "frame" + std::to_string(i);
    write_pgm(dir / (stem + "_q.pgm"), maps.texture, blocks_x, cfg.block_size);
    write_pgm(dir / (stem + "_s.pgm"), maps.saliency, blocks_x, cfg.block_size);
    write_pgm(dir / (stem + "_o.pgm"), maps.importance, blocks_x, cfg.block_size);
  }
  if (!csv) throw Error(ErrorKind::Io, "cannot write " + (dir / "importance.csv").string());
}

void write_packets(const fs::path& path, const std::vector<PacketBatch>& batches) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& b : batches) write_packet_dump(out, b);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft video delivery over OFDM with block compressed sensing"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  Overrides o;
  std::string in_dir, out_path, method = "proposed", trace_path, reference_path, baseline = "proposed";
  std::optional<double> csnr_single;
  std::optional<long long> rate_single;
  std::vector<std::string> reports;
  std::string importance_dir;

  auto* encode = app.add_subcommand("encode", "Sample a clip into packets plus a metadata sidecar");
  encode->add_option("--config", config_path);
  o.add_source(encode);
  o.add_encoder(encode);
  encode->add_option("--rate", rate_single, "Total samples T_tot for the sequence");
  encode->add_option("--out", out_path, "Output directory")->required();
  encode->add_option("--dump-importance", importance_dir, "Write Q/S/O maps as CSV and PGM");

  auto* transmit = app.add_subcommand("transmit", "Send an encoded stream over a simulated OFDM channel");
  transmit->add_option("--config", config_path);
  transmit->add_option("--in", in_dir, "Encoded directory")->required();
  transmit->add_option("--out", out_path, "Output directory")->required();
  transmit->add_option("--csnr-db", csnr_single);
  o.add_channel(transmit);

  auto* decode = app.add_subcommand("decode", "Reconstruct a received stream");
  decode->add_option("--config", config_path);
  decode->add_option("--in", in_dir, "Received directory")->required();
  decode->add_option("--out", out_path, "Output .y or .yuv")->required();
  decode->add_option("--method", method, "proposed or bcs-spl");
  decode->add_option("--trace", trace_path, "Per-iteration error CSV");
  decode->add_option("--reference", reference_path, "Source clip to score against");
  o.add_decoder(decode);

  auto* simulate = app.add_subcommand("simulate", "Run the full rate x CSNR grid");
  simulate->add_option("--config", config_path);
  o.add_source(simulate);
  o.add_encoder(simulate);
  o.add_channel(simulate);
  o.add_decoder(simulate);
  simulate->add_option("--rate", o.rates, "Total sample budgets")->expected(1, -1);
  simulate->add_option("--csnr-db", o.csnr, "Channel SNRs in dB")->expected(1, -1);
  simulate->add_option("--methods", o.methods, "proposed and/or bcs-spl")->expected(1, -1);
  simulate->add_option("--out", o.out, "Output directory");
  simulate->add_option("--jobs", o.jobs, "Concurrent grid cells");
  simulate->add_flag("--trace", o.trace, "Also write per-iteration errors");

  auto* report = app.add_subcommand("report", "BD-PSNR / BD-MS-SSIM table from report CSVs");
  report->add_option("reports", reports, "report.csv files")->required()->expected(1, -1);
  report->add_option("--out", out_path, "Write the table as CSV");
  report->add_option("--baseline", baseline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*encode) {
      auto cfg = resolve(config_path, o);
      const long long rate = rate_single ? *rate_single : cfg.rates.front();
      const auto source = load_input(cfg);
      const auto encoded = encode_sequence(source, encoder_settings(cfg, rate));
      fs::create_directories(out_path);
      write_json(fs::path(out_path) / "metadata.json", to_json(stream_header(encoded)));
      write_packets(fs::path(out_path) / "packets.bin", packetize_sequence(encoded));
      if (cfg.dump_alloc) {
        std::ofstream alloc(fs::path(out_path) / "alloc.csv");
        alloc << "frame,block,samples\n";
        for (std::size_t i = 0; i < encoded.budget.per_block.size(); ++i)
          for (std::size_t j = 0; j < encoded.budget.per_block[i].size(); ++j)
            alloc << i << ',' << j << ',' << encoded.budget.per_block[i][j] << '\n';
      }
      if (!importance_dir.empty()) dump_importance(importance_dir, source, cfg);
      std::cout << "encoded " << encoded.frames.size() << " frames, T_d = " << encoded.budget.data << '\n';
    } else if (*transmit) {
      auto cfg = resolve(config_path, o);
      const double csnr = csnr_single ? *csnr_single : cfg.csnr_db.front();
      auto meta = read_json(fs::path(in_dir) / "metadata.json");
      const auto header = stream_header_from_json(meta);
      const auto packets = read_packets(fs::path(in_dir) / "packets.bin", header);
      const auto sent = transmit_sequence(packets, channel_settings(cfg, csnr));
      std::vector<PacketBatch> received;
      json gains = json::array();
      for (const auto& t : sent) {
        received.push_back(t.received);
        json frame = json::array();
        for (int p = 0; p < t.received.packet_count(); ++p) {
          json packet = json::array();
          for (int l : t.plan.subchannels[p]) packet.push_back({l, t.plan.power(p, l)});
          frame.push_back(packet);
        }
        gains.push_back(frame);
      }
      meta["gains"] = gains;
      meta["csnr-db"] = csnr;
      fs::create_directories(out_path);
      write_json(fs::path(out_path) / "metadata.json", meta);
      write_packets(fs::path(out_path) / "packets.bin", received);
      if (cfg.dump_plan) {
        std::ofstream plan(fs::path(out_path) / "plan.csv");
        plan << "frame,packet,subchannel,gain,capacity,importance\n";
        for (std::size_t i = 0; i < sent.size(); ++i) {
          const auto pi = sent[i].received.importance();
          for (int p = 0; p < sent[i].received.packet_count(); ++p)
            for (int l : sent[i].plan.subchannels[p])
              plan << i << ',' << p << ',' << l << ',' << sent[i].plan.power(p, l) << ','
                   << sent[i].plan.capacity[p] << ',' << pi[p] << '\n';
        }
      }
      int erased = 0;
      for (const auto& b : received)
        for (const auto& p : b.packets) erased += p.erased ? 1 : 0;
      std::cout << "transmitted " << received.size() << " frames, " << erased << " packets erased\n";
    } else if (*decode) {
      auto cfg = resolve(config_path, o);
      const auto header = stream_header_from_json(read_json(fs::path(in_dir) / "metadata.json"));
      const auto received = read_packets(fs::path(in_dir) / "packets.bin", header);
      const auto result = decode_sequence(header, received, decoder_settings(cfg, parse_decode_method(method)));
      write_video(out_path, result.video, raw_format_for_path(out_path));
      if (!trace_path.empty()) {
        std::ofstream trace(trace_path);
        trace << "frame,iteration,error\n";
        for (std::size_t i = 0; i < result.traces.size(); ++i)
          for (std::size_t k = 0; k < result.traces[i].errors.size(); ++k)
            trace << i << ',' << k + 1 << ',' << result.traces[i].errors[k] << '\n';
      }
      int concealed = 0;
      for (bool c : result.concealed) concealed += c ? 1 : 0;
      std::cout << "decoded " << result.video.frame_count() << " frames, " << concealed << " concealed\n";
      if (!reference_path.empty()) {
        const auto ref = load_video(reference_path, header.width, header.height,
                                    static_cast<int>(header.frames.size()), raw_format_for_path(reference_path));
        std::cout << "psnr_db " << mean_psnr(ref, result.video) << " ms_ssim " << mean_ms_ssim(ref, result.video)
                  << '\n';
      }
    } else if (*simulate) {
      auto cfg = resolve(config_path, o);
      const auto rows = run_simulate(cfg, [](const std::string& msg) { std::cerr << msg << '\n'; });
      write_report_csv(std::cout, rows);
    } else if (*report) {
      std::vector<ReportRow> rows;
      for (const auto& path : reports) {
        auto part = read_report_csv(path);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const auto table = bd_table(rows, baseline);
      write_bd_csv(std::cout, table);
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        write_bd_csv(out, table);
      }
    }
  } catch (const Error& e) {
    std::cerr << "adacast: " << e.what() << '\n';
    return e.kind() == ErrorKind::Usage || e.kind() == ErrorKind::Io ? 2 : 1;
  }
  return 0;
}
