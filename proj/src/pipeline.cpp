#include "adacast/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "adacast/error.hpp"
#include "adacast/importance.hpp"
#include "adacast/metrics.hpp"

namespace adacast {

using nlohmann::json;

namespace {

constexpr double kConcealLevel = 128.0;

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Rethrows library errors with the failing stage in front.
template <typename F>
auto staged(const char* stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(stage) + ": " + e.detail());
  }
}

std::string cell_name(long long rate, double csnr_db) {
  std::ostringstream name;
  name << "rate-" << rate << "_csnr-" << csnr_db;
  return name.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

EncodedSequence encode_sequence(const VideoSequence& video, const EncoderSettings& settings) {
  if (video.frame_count() == 0) throw Error(ErrorKind::Dimension, "empty sequence");
  const int width = video.width();
  const int height = video.height();
  const int b = settings.block_size;
  validate_block_dimensions(width, height, b);
  if (video.gop_length < 1) throw Error(ErrorKind::Config, "GOP length must be at least 1");

  const int n = video.frame_count();
  const int m = (width / b) * (height / b);
  EncodedSequence out;
  out.width = width;
  out.height = height;
  out.block_size = b;
  out.gop_length = video.gop_length;
  out.matrix_seed = settings.matrix_seed;
  out.budget.total = settings.rate;
  out.budget.overhead = overhead_samples(n, m, b * b);
  out.budget.data = settings.rate - out.budget.overhead;
  out.budget.min_per_block = settings.min_per_block;

  std::vector<Frame> targets;
  std::vector<double> complexity;
  out.frames.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool intra = i % video.gop_length == 0;
    const Frame& original = video.frames[i];
    if (original.width != width || original.height != height)
      throw Error(ErrorKind::Dimension, "frame " + std::to_string(i) + " differs in size");
    targets.push_back(intra ? original : compute_residual(original, video.frames[i - 1]));
    auto& f = out.frames[i];
    f.measurements.kind = intra ? FrameKind::Intra : FrameKind::Residual;
    f.complexity = frame_complexity(settings.complexity_on_residual ? targets.back() : original);
    f.importance = compute_importance(settings.importance_on_original ? original : targets.back(), b,
                                      settings.fusion).importance;
    complexity.push_back(f.complexity);
  }

  out.budget.per_frame = allocate_frame_rates(complexity, out.budget.data, m, settings.min_per_block, b);
  const SamplingMatrix phi(b, settings.matrix_seed);
  for (int i = 0; i < n; ++i) {
    auto& f = out.frames[i];
    const auto counts = allocate_block_rates(f.importance, out.budget.per_frame[i], settings.min_per_block, b);
    out.budget.per_block.push_back(counts);
    f.measurements = measure_frame(targets[i], counts, phi, i, f.measurements.kind);
    double energy = 0.0;
    for (const auto& y : f.measurements.samples) energy += y.squaredNorm();
    const auto total = f.measurements.total_samples();
    const double rms = total > 0 ? std::sqrt(energy / static_cast<double>(total)) : 0.0;
    f.scale = rms > 0.0 ? rms : 1.0;
  }
  return out;
}

StreamHeader stream_header(const EncodedSequence& encoded) {
  StreamHeader h;
  h.width = encoded.width;
  h.height = encoded.height;
  h.block_size = encoded.block_size;
  h.gop_length = encoded.gop_length;
  h.matrix_seed = encoded.matrix_seed;
  h.min_per_block = encoded.budget.min_per_block;
  h.rate = encoded.budget.total;
  h.overhead = encoded.budget.overhead;
  for (std::size_t i = 0; i < encoded.frames.size(); ++i) {
    const auto& f = encoded.frames[i];
    h.frames.push_back({static_cast<int>(i), f.measurements.kind, f.measurements.counts, f.scale});
  }
  return h;
}

json to_json(const StreamHeader& header) {
  json frames = json::array();
  for (const auto& f : header.frames)
    frames.push_back({{"index", f.index},
                      {"kind", f.kind == FrameKind::Intra ? "I" : "P"},
                      {"scale", f.scale},
                      {"counts", f.counts}});
  return json{{"width", header.width},     {"height", header.height},
              {"block-size", header.block_size}, {"gop", header.gop_length},
              {"matrix-seed", header.matrix_seed}, {"m-min", header.min_per_block},
              {"rate", header.rate},       {"overhead", header.overhead},
              {"frames", frames}};
}

StreamHeader stream_header_from_json(const json& doc) {
  StreamHeader h;
  try {
    h.width = doc.at("width").get<int>();
    h.height = doc.at("height").get<int>();
    h.block_size = doc.at("block-size").get<int>();
    h.gop_length = doc.at("gop").get<int>();
    h.matrix_seed = doc.at("matrix-seed").get<std::uint64_t>();
    h.min_per_block = doc.at("m-min").get<int>();
    h.rate = doc.at("rate").get<long long>();
    h.overhead = doc.at("overhead").get<long long>();
    for (const auto& f : doc.at("frames")) {
      FrameHeader fh;
      fh.index = f.at("index").get<int>();
      const auto kind = f.at("kind").get<std::string>();
      if (kind != "I" && kind != "P") throw Error(ErrorKind::CorruptStream, "frame kind must be I or P");
      fh.kind = kind == "I" ? FrameKind::Intra : FrameKind::Residual;
      fh.scale = f.at("scale").get<double>();
      fh.counts = f.at("counts").get<std::vector<int>>();
      h.frames.push_back(std::move(fh));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::CorruptStream, std::string("metadata: ") + e.what());
  }
  validate_block_dimensions(h.width, h.height, h.block_size);
  const std::size_t blocks = static_cast<std::size_t>(h.width / h.block_size) * (h.height / h.block_size);
  for (const auto& f : h.frames)
    if (f.counts.size() != blocks) throw Error(ErrorKind::CorruptStream, "metadata block count mismatch");
  return h;
}

std::vector<PacketBatch> packetize_sequence(const EncodedSequence& encoded) {
  std::vector<PacketBatch> out;
  out.reserve(encoded.frames.size());
  for (const auto& f : encoded.frames) {
    PacketBatch batch = packetize(f.measurements);
    for (auto& p : batch.packets)
      for (auto& s : p.samples) s /= f.scale;
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<TransmittedFrame> transmit_sequence(const std::vector<PacketBatch>& packets,
                                                const ChannelSettings& settings) {
  std::vector<TransmittedFrame> out;
  out.reserve(packets.size());
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& batch = packets[i];
    TransmittedFrame t;
    t.channel = draw_channel(batch.packet_count(), settings.subchannels, settings.csnr_db, settings.total_power,
                             settings.channel_seed + i);
    t.plan = plan_transmission(batch, t.channel, settings.solver);
    TransmitOptions opts;
    opts.noise_seed = settings.noise_seed + i;
    opts.loss_seed = settings.loss_seed + i;
    opts.loss_rate = settings.loss_rate;
    opts.noiseless = settings.noiseless;
    opts.scaling = settings.scaling;
    t.received = transmit(batch, t.plan, t.channel, opts);
    out.push_back(std::move(t));
  }
  return out;
}

DecodeMethod parse_decode_method(std::string_view name) {
  if (name == "proposed") return DecodeMethod::Proposed;
  if (name == "bcs-spl") return DecodeMethod::BcsSpl;
  throw Error(ErrorKind::Config, "unknown method '" + std::string(name) + "'");
}

std::string_view to_string(DecodeMethod method) {
  return method == DecodeMethod::Proposed ? "proposed" : "bcs-spl";
}

DecodeResult decode_sequence(const StreamHeader& header, const std::vector<PacketBatch>& received,
                             const DecoderSettings& settings) {
  if (received.size() != header.frames.size())
    throw Error(ErrorKind::CorruptStream, "packet stream and metadata disagree on frame count");
  const int w = header.width;
  const int h = header.height;
  const int b = header.block_size;
  const SamplingMatrix phi(b, header.matrix_seed);

  DecodeResult out;
  out.video.gop_length = header.gop_length;
  Frame previous;
  Frame previous_residual;
  bool have_previous = false;
  bool have_residual = false;

  for (std::size_t i = 0; i < header.frames.size(); ++i) {
    const auto& fh = header.frames[i];
    auto unpacked = depacketize(received[i], fh.counts);
    ReconstructionTrace trace;
    int worst = 0;
    for (const auto& mask : unpacked.missing)
      worst = std::max(worst, static_cast<int>(std::count(mask.begin(), mask.end(), true)));
    out.max_block_loss.push_back(worst);

    if (unpacked.unrecoverable) {
      previous = have_previous ? previous : Frame(w, h, kConcealLevel);
      have_previous = true;
      have_residual = false;
      out.video.frames.push_back(clamp_to_8bit_range(previous));
      out.concealed.push_back(true);
      out.traces.push_back(trace);
      continue;
    }
    for (auto& y : unpacked.samples) y *= fh.scale;
    const FrameObservations obs = unpacked.observations(w, h, b);
    const BlockProjector projector(obs, phi);

    Frame recon;
    if (fh.kind == FrameKind::Intra || !have_previous) {
      if (fh.kind == FrameKind::Residual) previous = Frame(w, h, kConcealLevel);
      if (settings.method == DecodeMethod::BcsSpl || !have_previous) {
        recon = bcs_spl(projector, w, h, b, settings.recon, &trace);
      } else {
        recon = recon_frame(projector, previous, b, settings.recon, settings.init, &trace);
      }
      if (fh.kind == FrameKind::Residual) recon = add_frames(previous, recon);
      have_residual = false;
    } else {
      ReconstructionTrace init_trace;
      const Frame residual = bcs_spl(projector, w, h, b, settings.recon, &init_trace);
      if (settings.method == DecodeMethod::BcsSpl) {
        trace = init_trace;
        previous_residual = residual;
        recon = add_frames(previous, residual);
      } else if (settings.residual_domain) {
        Frame refined = residual;
        if (have_residual) refined = recon_frame(projector, previous_residual, b, settings.recon, settings.init,
                                                 &trace, &residual);
        else trace = init_trace;
        previous_residual = refined;
        recon = add_frames(previous, refined);
      } else {
        const BlockProjector lifted(lift_observations(obs, previous, phi), phi);
        const Frame initial = add_frames(previous, residual);
        recon = recon_frame(lifted, previous, b, settings.recon, settings.init, &trace, &initial);
        previous_residual = compute_residual(recon, previous);
      }
      have_residual = true;
    }
    previous = recon;
    have_previous = true;
    out.video.frames.push_back(clamp_to_8bit_range(recon));
    out.concealed.push_back(false);
    out.traces.push_back(std::move(trace));
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "sequence,method,rate,csnr_db,psnr_db,ms_ssim,concealed_frames,st_rred\n";
  for (const auto& r : rows)
    out << r.sequence << ',' << r.method << ',' << r.rate << ',' << fixed(r.csnr_db, 3) << ','
        << fixed(r.psnr_db, 6) << ',' << fixed(r.ms_ssim, 6) << ',' << r.concealed_frames << ",\n";
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::CorruptStream, "report is empty");
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const char* need : {"sequence", "method", "rate", "csnr_db", "psnr_db", "ms_ssim"})
    if (!col.count(need)) throw Error(ErrorKind::CorruptStream, std::string("report lacks column ") + need);

  std::vector<ReportRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < header.size() - (col.count("st_rred") ? 1 : 0))
      throw Error(ErrorKind::CorruptStream, "report line " + std::to_string(line_no) + " is short");
    try {
      ReportRow r;
      r.sequence = f[col["sequence"]];
      r.method = f[col["method"]];
      r.rate = std::stoll(f[col["rate"]]);
      r.csnr_db = std::stod(f[col["csnr_db"]]);
      r.psnr_db = std::stod(f[col["psnr_db"]]);
      r.ms_ssim = std::stod(f[col["ms_ssim"]]);
      if (col.count("concealed_frames") && col["concealed_frames"] < f.size() && !f[col["concealed_frames"]].empty())
        r.concealed_frames = std::stoi(f[col["concealed_frames"]]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::CorruptStream, "report line " + std::to_string(line_no) + " has a bad number");
    }
  }
  return rows;
}

std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open report " + path.string());
  return read_report_csv(in);
}

EncoderSettings encoder_settings(const ExperimentConfig& cfg, long long rate) {
  EncoderSettings s;
  s.block_size = cfg.block_size;
  s.min_per_block = cfg.min_per_block;
  s.rate = rate;
  s.matrix_seed = cfg.matrix_seed;
  s.fusion = cfg.fusion;
  s.complexity_on_residual = cfg.complexity_on_residual;
  s.importance_on_original = cfg.importance_on_original;
  return s;
}

ChannelSettings channel_settings(const ExperimentConfig& cfg, double csnr_db) {
  ChannelSettings s;
  s.subchannels = cfg.subchannels;
  s.csnr_db = csnr_db;
  s.total_power = cfg.total_power;
  s.loss_rate = cfg.loss_rate;
  s.noiseless = cfg.noiseless;
  s.scaling = cfg.scaling;
  s.channel_seed = cfg.channel_seed;
  s.noise_seed = cfg.noise_seed;
  s.loss_seed = cfg.loss_seed;
  return s;
}

DecoderSettings decoder_settings(const ExperimentConfig& cfg, DecodeMethod method) {
  DecoderSettings s;
  s.method = method;
  s.recon = cfg.recon;
  s.init = cfg.init;
  s.residual_domain = cfg.residual_domain;
  return s;
}

namespace {

void write_alloc(const std::filesystem::path& path, const EncodedSequence& encoded) {
  std::ofstream out(path);
  out << "frame,kind,budget,complexity,scale\n";
  for (std::size_t i = 0; i < encoded.frames.size(); ++i) {
    const auto& f = encoded.frames[i];
    out << i << ',' << (f.measurements.kind == FrameKind::Intra ? "I" : "P") << ',' << encoded.budget.per_frame[i]
        << ',' << fixed(f.complexity, 6) << ',' << fixed(f.scale, 6) << '\n';
  }
}

void write_block_alloc(const std::filesystem::path& path, const EncodedSequence& encoded) {
  std::ofstream out(path);
  out << "frame,block,importance,samples\n";
  for (std::size_t i = 0; i < encoded.frames.size(); ++i) {
    const auto& f = encoded.frames[i];
    for (std::size_t j = 0; j < f.measurements.counts.size(); ++j)
      out << i << ',' << j << ',' << fixed(f.importance[j], 6) << ',' << f.measurements.counts[j] << '\n';
  }
}

void write_plan(const std::filesystem::path& path, const std::vector<TransmittedFrame>& frames) {
  std::ofstream out(path);
  out << "frame,packet,length,importance,subchannels,gains,packet_power,capacity,fallback\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& t = frames[i];
    const auto pi = t.received.importance();
    for (int p = 0; p < t.received.packet_count(); ++p) {
      std::string omega;
      std::string gains;
      for (int l : t.plan.subchannels[p]) {
        omega += (omega.empty() ? "" : " ") + std::to_string(l);
        gains += (gains.empty() ? "" : " ") + fixed(t.plan.power(p, l), 9);
      }
      out << i << ',' << p << ',' << t.received.packets[p].length() << ',' << fixed(pi[p], 9) << ',' << omega << ','
          << gains << ',' << fixed(t.plan.packet_power[p], 9) << ',' << fixed(t.plan.capacity[p], 9) << ','
          << (t.plan.equal_power_fallback ? 1 : 0) << '\n';
    }
  }
}

void write_trace(const std::filesystem::path& dir, const VideoSequence& source, const DecodeResult& result,
                 const StreamHeader& header, bool iterations) {
  std::ofstream out(dir / "trace.csv");
  out << "frame,kind,concealed,iterations,transforms_built,final_error,psnr_db,ms_ssim\n";
  for (int i = 0; i < source.frame_count(); ++i) {
    const auto& t = result.traces[i];
    out << i << ',' << (header.frames[i].kind == FrameKind::Intra ? "I" : "P") << ','
        << (result.concealed[i] ? 1 : 0) << ',' << t.iterations << ',' << t.transforms_built << ','
        << (t.errors.empty() ? std::string() : fixed(t.errors.back(), 9)) << ','
        << fixed(psnr(source.frames[i], result.video.frames[i]), 6) << ','
        << fixed(ms_ssim(source.frames[i], result.video.frames[i]), 6) << '\n';
  }
  if (!iterations) return;
  std::ofstream it(dir / "iterations.csv");
  it << "frame,iteration,error\n";
  for (std::size_t i = 0; i < result.traces.size(); ++i)
    for (std::size_t k = 0; k < result.traces[i].errors.size(); ++k)
      it << i << ',' << k + 1 << ',' << fixed(result.traces[i].errors[k], 9) << '\n';
}

std::vector<ReportRow> run_cell(const ExperimentConfig& cfg, const VideoSequence& source, long long rate,
                                double csnr_db) {
  const auto dir = cfg.out / cell_name(rate, csnr_db);
  std::filesystem::create_directories(dir);

  const auto encoded = staged("rate-control", [&] { return encode_sequence(source, encoder_settings(cfg, rate)); });
  const auto header = stream_header(encoded);
  write_alloc(dir / "alloc.csv", encoded);
  if (cfg.dump_alloc) write_block_alloc(dir / "blocks.csv", encoded);
  const auto packets = staged("packetization", [&] { return packetize_sequence(encoded); });
  const auto sent = staged("ofdm-channel", [&] { return transmit_sequence(packets, channel_settings(cfg, csnr_db)); });
  if (cfg.dump_plan) write_plan(dir / "plan.csv", sent);
  std::vector<PacketBatch> received;
  for (const auto& t : sent) received.push_back(t.received);

  std::vector<ReportRow> rows;
  for (const auto& name : cfg.methods) {
    const auto method = parse_decode_method(name);
    const auto result = staged("reconstruction", [&] {
      return decode_sequence(header, received, decoder_settings(cfg, method));
    });
    const auto method_dir = dir / name;
    std::filesystem::create_directories(method_dir);
    write_video(method_dir / "recon.yuv", result.video, RawFormat::Yuv420);
    write_trace(method_dir, source, result, header, cfg.trace);

    ReportRow row;
    row.sequence = cfg.name;
    row.method = name;
    row.rate = rate;
    row.csnr_db = csnr_db;
    staged("metrics", [&] {
      row.psnr_db = mean_psnr(source, result.video);
      row.ms_ssim = mean_ms_ssim(source, result.video);
      return 0;
    });
    row.concealed_frames = static_cast<int>(std::count(result.concealed.begin(), result.concealed.end(), true));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::vector<ReportRow> run_simulate(const ExperimentConfig& cfg, const ProgressSink& progress) {
  cfg.validate();
  const auto source = staged("video-io", [&] { return load_input(cfg); });
  std::filesystem::create_directories(cfg.out);

  struct Cell {
    long long rate;
    double csnr;
  };
  std::vector<Cell> cells;
  for (auto rate : cfg.rates)
    for (auto csnr : cfg.csnr_db) cells.push_back({rate, csnr});

  std::vector<std::vector<ReportRow>> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      try {
        results[k] = run_cell(cfg, source, cells[k].rate, cells[k].csnr);
        if (progress) {
          std::lock_guard lock(log_mutex);
          progress(cell_name(cells[k].rate, cells[k].csnr) + " done");
        }
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(cfg.jobs, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<ReportRow> rows;
  for (const auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  {
    std::ofstream out(cfg.out / "report.csv");
    write_report_csv(out, rows);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + (cfg.out / "report.csv").string());
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::vector<BdRow> bd_table(const std::vector<ReportRow>& rows, const std::string& baseline) {
  using Key = std::pair<std::string, double>;
  std::map<Key, std::map<std::string, std::pair<RdCurve, RdCurve>>> groups;
  for (const auto& r : rows) {
    auto& curves = groups[{r.sequence, r.csnr_db}][r.method];
    curves.first.points.emplace_back(static_cast<double>(r.rate), r.psnr_db);
    curves.second.points.emplace_back(static_cast<double>(r.rate), r.ms_ssim);
  }
  std::vector<BdRow> out;
  for (const auto& [key, curves] : groups) {
    if (curves.size() < 2) continue;
    const std::string base = curves.count(baseline) ? baseline : curves.begin()->first;
    const auto& ref = curves.at(base);
    for (const auto& [method, curve] : curves) {
      if (method == base) continue;
      out.push_back({key.first, key.second, base, method, bd_quality(ref.first, curve.first),
                     bd_quality(ref.second, curve.second)});
    }
  }
  if (out.empty()) throw Error(ErrorKind::Usage, "report needs at least two RD curves for the same sequence and CSNR");
  return out;
}

void write_bd_csv(std::ostream& out, const std::vector<BdRow>& rows) {
  out << "sequence,csnr_db,baseline,method,bd_psnr_db,bd_ms_ssim\n";
  for (const auto& r : rows)
    out << r.sequence << ',' << fixed(r.csnr_db, 3) << ',' << r.baseline << ',' << r.method << ','
        << fixed(r.bd_psnr, 4) << ',' << fixed(r.bd_ms_ssim, 6) << '\n';
}

}  // namespace adacast
