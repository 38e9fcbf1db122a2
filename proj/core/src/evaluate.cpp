#include "wmr/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "wmr/errors.hpp"
#include "wmr/trainer.hpp"

namespace wmr {

using nlohmann::json;

namespace {

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

std::string cell(double v, int precision) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

SampleScore score(const Remover& remover, const DatasetManifest& manifest, const ManifestRow& row,
                  const SsimOptions& opts) {
  const Image x = to_rgb(load_image(manifest.resolve(row.x_path)));
  const Image y = to_rgb(load_image(manifest.resolve(row.y_path)));
  const Image out = remover(x);
  if (!out.same_shape(y)) throw ShapeError("remover changed the shape of " + row.x_path);
  const Image q = quantized(out);
  SampleScore s;
  s.x_path = row.x_path;
  s.watermark_id = row.watermark_id;
  s.output_psnr = psnr(out, y);
  s.output_dssim = dssim(out, y, opts);
  s.input_psnr = psnr(x, y);
  s.input_dssim = dssim(x, y, opts);
  s.quantized_psnr = psnr(q, y);
  s.quantized_dssim = dssim(q, y, opts);
  return s;
}

}  // namespace

Aggregate aggregate(const std::vector<SampleScore>& scores) {
  Aggregate a;
  for (const auto& s : scores) {
    a.output_psnr += s.output_psnr;
    a.output_dssim += s.output_dssim;
    a.input_psnr += s.input_psnr;
    a.input_dssim += s.input_dssim;
    a.quantized_psnr += s.quantized_psnr;
    a.quantized_dssim += s.quantized_dssim;
  }
  a.count = scores.size();
  if (a.count > 0) {
    const auto n = static_cast<double>(a.count);
    a.output_psnr /= n;
    a.output_dssim /= n;
    a.input_psnr /= n;
    a.input_dssim /= n;
    a.quantized_psnr /= n;
    a.quantized_dssim /= n;
  }
  return a;
}

EvalReport evaluate(const Remover& remover, const DatasetManifest& manifest,
                    const EvalOptions& options) {
  const std::vector<ManifestRow> rows = manifest.rows_in(options.split);
  if (rows.empty()) throw DataError(to_string(options.split) + " split is empty");

  EvalReport report;
  report.label = options.label;
  report.samples.resize(rows.size());
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(rows.size())));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < rows.size(); i += workers) {
            report.samples[i] = score(remover, manifest, rows[i], report.ssim_options);
          }
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  report.overall = aggregate(report.samples);
  std::map<std::string, std::vector<SampleScore>> groups;
  for (const auto& s : report.samples) groups[s.watermark_id].push_back(s);
  for (const auto& [id, scores] : groups) report.per_watermark[id] = aggregate(scores);
  return report;
}

EvalReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest,
                    const EvalOptions& options) {
  const GeneratorParams& g = ckpt.generator;
  return evaluate([&g](const Image& x) { return remove_watermark_resized(g, x); }, manifest,
                  options);
}

EvalReport evaluate_identity(const DatasetManifest& manifest, const EvalOptions& options) {
  EvalOptions o = options;
  if (o.label == EvalOptions{}.label) o.label = "identity";
  return evaluate([](const Image& x) { return x; }, manifest, o);
}

json metric_conventions(const SsimOptions& opts) {
  return {{"peak", opts.peak},
          {"psnr", "10*log10(peak^2/MSE), MSE over all channels; identical images give inf"},
          {"ssim_window", "gaussian"},
          {"ssim_window_size", opts.window},
          {"ssim_sigma", opts.sigma},
          {"ssim_k1", opts.k1},
          {"ssim_k2", opts.k2},
          {"ssim_border", "valid windows only, mean over windows and channels"},
          {"dssim", "(1 - ssim) / 2"},
          {"domain", "float outputs before quantization; quantized_* fields use 8-bit outputs"}};
}

json to_json(const Aggregate& a) {
  return {{"count", a.count},
          {"output_psnr", number(a.output_psnr)},
          {"output_dssim", number(a.output_dssim)},
          {"input_psnr", number(a.input_psnr)},
          {"input_dssim", number(a.input_dssim)},
          {"quantized_psnr", number(a.quantized_psnr)},
          {"quantized_dssim", number(a.quantized_dssim)}};
}

json to_json(const EvalReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"x_path", s.x_path},
                       {"watermark_id", s.watermark_id},
                       {"output_psnr", number(s.output_psnr)},
                       {"output_dssim", number(s.output_dssim)},
                       {"input_psnr", number(s.input_psnr)},
                       {"input_dssim", number(s.input_dssim)},
                       {"quantized_psnr", number(s.quantized_psnr)},
                       {"quantized_dssim", number(s.quantized_dssim)}});
  }
  json groups = json::object();
  for (const auto& [id, a] : r.per_watermark) groups[id] = to_json(a);
  return {{"label", r.label},
          {"conventions", metric_conventions(r.ssim_options)},
          {"overall", to_json(r.overall)},
          {"baseline", {{"psnr", number(r.overall.input_psnr)},
                        {"dssim", number(r.overall.input_dssim)}}},
          {"per_watermark", groups},
          {"samples", samples}};
}

std::string format_table(const std::vector<EvalReport>& reports, const std::string& title) {
  std::size_t width = 5;
  for (const auto& r : reports) width = std::max(width, r.label.size());
  auto row = [width](const std::string& label, const std::string& p, const std::string& d) {
    std::string line = label;
    line.resize(width, ' ');
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %10s  %8s\n", p.c_str(), d.c_str());
    return line + buf;
  };
  std::string out = title + "\n";
  out += row("", "PSNR (dB)", "DSSIM");
  if (!reports.empty()) {
    const Aggregate& base = reports.front().overall;
    out += row("Input", cell(base.input_psnr, 2), cell(base.input_dssim, 4));
  }
  for (const auto& r : reports) {
    out += row(r.label, cell(r.overall.output_psnr, 2), cell(r.overall.output_dssim, 4));
  }
  return out;
}

}  // namespace wmr
