// photospin: batch front end for the photon-statistics and spin-resonance
// pipeline. Every command writes its outputs plus <command>.manifest.json
// into the output directory (--out, else $PHOTOSPIN_OUT, else ".").
// `photospin rerun <manifest>` replays a run from its resolved parameters.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 fit or
// integration failure (diagnostics are still written), 4 file I/O.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

#include "photospin/correlator.hpp"
#include "photospin/fit_models.hpp"
#include "photospin/io.hpp"
#include "photospin/photon_stream.hpp"
#include "photospin/ratemodel.hpp"
#include "photospin/spinsim.hpp"

using namespace photospin;

namespace {

enum ExitCode { kOk = 0, kInvalid = 2, kNoConvergence = 3, kIo = 4 };

struct Context {
  fs::path out_dir;
  unsigned jobs = 0;
  RunManifest manifest;

  fs::path output(const std::string& name) {
    manifest.outputs.push_back(name);
    return out_dir / name;
  }
};

/// Reads `key` from the parameters, storing `fallback` when it is absent so
/// that the manifest carries the fully resolved configuration.
template <typename T>
T take(json& p, const char* key, T fallback) {
  if (!p.contains(key) || p[key].is_null()) p[key] = fallback;
  return p[key].get<T>();
}

template <typename T>
T require(const json& p, const char* key) {
  if (!p.contains(key) || p[key].is_null()) throw ConfigurationError(std::string("missing parameter '") + key + "'");
  return p[key].get<T>();
}

fs::path input_path(json& p, const char* key, Context& ctx) {
  const fs::path path = fs::absolute(require<std::string>(p, key));
  p[key] = path.string();
  ctx.manifest.inputs.push_back(path.string());
  return path;
}

std::vector<double> number_list(json& p, const char* key, std::vector<double> fallback) {
  if (p.contains(key) && p[key].is_number()) p[key] = json::array({p[key]});
  return take(p, key, fallback);
}

int fit_status(const FitResult& fit) { return fit.converged ? kOk : kNoConvergence; }

LevelModel level_model(json& p) {
  const std::string m = take<std::string>(p, "model", "three_level");
  if (m == "three_level" || m == "3") {
    p["model"] = "three_level";
    return LevelModel::three_level;
  }
  if (m == "four_level" || m == "4") {
    p["model"] = "four_level";
    return LevelModel::four_level;
  }
  throw ConfigurationError("model must be three_level or four_level, got '" + m + "'");
}

CorrelationCurve curve_from_tags(const PhotonStream& stream, json& p) {
  const double bin = take(p, "bin_width_ps", 486.0);
  const double max_delay = take(p, "max_delay_ns", 1000.0);
  const double target = take(p, "rebin_ps", 972.0);
  const std::string split = take<std::string>(p, "rate_split", "measured");
  if (split != "measured" && split != "sixty_forty") {
    throw ConfigurationError("rate_split must be measured or sixty_forty");
  }
  const auto hist = coincidence_histogram(stream, bin, max_delay);
  return rebin(normalize(hist, split == "measured" ? RateSplit::measured : RateSplit::sixty_forty), target);
}

G2FitOptions g2_options(json& p) {
  G2FitOptions opt;
  opt.fit_visibility = take(p, "visibility", false);
  opt.max_abs_delay_ns = take(p, "max_abs_delay_ns", 0.0);
  return opt;
}

// ---------------------------------------------------------------------------

int simulate_g2(json& p, Context& ctx) {
  RateCoefficients<double> rc;
  if (p.contains("rates")) {
    const auto& r = p["rates"];
    rc = {require<double>(r, "k_ge"), require<double>(r, "k_eg"), require<double>(r, "k_es"),
          require<double>(r, "k_sg")};
  } else if (p.contains("limits")) {
    auto& l = p["limits"];
    rc = rates_from_limits_3level(require<double>(l, "tau1_0"), require<double>(l, "tau2_inf"),
                                  require<double>(l, "c_inf"));
    const double intensity = require<double>(p, "intensity");
    const double wavelength = take(p, "wavelength_nm", 785.0);
    const double I0 = take(p, "I0_sat", 44.0);
    const double kappa_default = cross_section(rc, I0, wavelength) * 1e3 / photon_energy_joule(wavelength) * 1e-9;
    rc.k_ge = take(p, "kappa", kappa_default) * intensity;
    p["rates"] = {{"k_ge", rc.k_ge}, {"k_eg", rc.k_eg}, {"k_es", rc.k_es}, {"k_sg", rc.k_sg}};
  } else {
    throw ConfigurationError("simulate-g2 needs 'rates' or 'limits' with 'intensity'");
  }
  validate(rc);

  StreamConfig cfg;
  cfg.duration_s = require<double>(p, "duration_s");
  cfg.detection_efficiency = take(p, "detection_efficiency", 1.0);
  cfg.background_rates = take(p, "background_rates", std::array<double, 2>{0.0, 0.0});
  cfg.split = take(p, "split", 0.5);
  cfg.seed = take<std::uint64_t>(p, "seed", 1);
  const std::string sampler = take<std::string>(p, "sampler", "event_by_event");
  if (sampler == "renewal") {
    cfg.sampler = StreamSampler::renewal;
  } else if (sampler == "event_by_event") {
    cfg.sampler = StreamSampler::event_by_event;
  } else {
    throw ConfigurationError("sampler must be renewal or event_by_event");
  }
  if (!(cfg.duration_s > 0.0)) throw ConfigurationError("duration_s must be positive");
  ctx.manifest.seed = cfg.seed;

  const auto stream = simulate_photon_stream(rc, cfg);
  const std::string format = take<std::string>(p, "tag_format", "binary");
  if (format == "binary") {
    write_photon_stream_binary(ctx.output("timetags.bin"), stream);
  } else if (format == "csv") {
    write_photon_stream_csv(ctx.output("timetags.csv"), stream);
  } else {
    throw ConfigurationError("tag_format must be binary or csv");
  }
  const auto curve = curve_from_tags(stream, p);
  write_curve_csv(ctx.output("g2.csv"), curve);
  ctx.manifest.outputs.push_back("g2.csv.json");

  const auto g2p = g2_parameters(rc);
  json summary = {{"photons", stream.size()},
                  {"detected_rate_per_s", static_cast<double>(stream.size()) / cfg.duration_s},
                  {"model_tau1_ns", g2p.tau1},
                  {"model_tau2_ns", g2p.tau2},
                  {"model_c", g2p.c}};
  write_json(ctx.output("simulate_g2.json"), summary);
  return kOk;
}

int fit_g2_cmd(json& p, Context& ctx) {
  CorrelationCurve curve;
  if (p.contains("tags")) {
    curve = curve_from_tags(read_photon_stream(input_path(p, "tags", ctx)), p);
  } else {
    curve = read_curve(input_path(p, "input", ctx));
  }
  const auto fit = fit_g2(curve, g2_options(p));
  write_json(ctx.output("fit_g2.json"), to_json(fit));
  return fit_status(fit);
}

int global_fit_cmd(json& p, Context& ctx) {
  const auto entries = read_series_manifest(input_path(p, "series", ctx));
  const LevelModel model = level_model(p);
  GlobalFitOptions opt;
  opt.I0_sat = take(p, "I0_sat", 44.0);
  opt.free_I0 = take(p, "free_I0", false);
  opt.wavelength_nm = take(p, "wavelength_nm", 785.0);
  const auto g2opt = g2_options(p);

  std::optional<FitResult> saturation;
  if (p.contains("saturation") && !p["saturation"].is_null()) {
    saturation = fit_saturation(read_saturation_csv(input_path(p, "saturation", ctx)));
  }
  BackgroundPolicy policy;
  policy.min_laser_background_fraction = take(p, "min_laser_background_fraction", 0.2);

  std::vector<IntensityFit> series;
  json per_curve = json::array();
  int status = kOk;
  for (const auto& e : entries) {
    if (!e.intensity) throw ConfigurationError("series entry '" + e.file.string() + "' has no intensity");
    ctx.manifest.inputs.push_back(e.file.string());
    CorrelationCurve curve = read_curve(e.file);
    if (saturation) {
      const auto& s = *saturation;
      curve = apply_background_policy(curve, *e.intensity, s["S_max"].value, s["I0"].value, s["m"].value,
                                      s["b"].value, policy);
    }
    const auto fit = fit_g2(curve, g2opt);
    if (!fit.converged) status = kNoConvergence;
    series.push_back({*e.intensity, fit});
    per_curve.push_back({{"file", e.file.string()},
                         {"intensity", *e.intensity},
                         {"background_corrected", curve.background_corrected},
                         {"fit", to_json(fit)}});
  }
  const auto global = global_photophysics_fit(series, model, opt);
  if (!global.converged) status = kNoConvergence;
  json out = {{"model", p["model"]}, {"global", to_json(global)}, {"curves", per_curve}};
  if (saturation) out["saturation"] = to_json(*saturation);
  write_json(ctx.output("global_fit.json"), out);

  std::ofstream table(ctx.output("g2_parameters.csv"));
  table << "intensity_kw_cm2,tau1_ns,tau1_sigma,tau2_ns,tau2_sigma,c,c_sigma\n";
  for (const auto& s : series) {
    table << format_double(s.intensity);
    for (const char* name : {"tau1", "tau2", "c"}) {
      table << ',' << format_double(s.g2[name].value) << ',' << format_double(s.g2[name].uncertainty);
    }
    table << '\n';
  }
  if (!table) throw IoError("cannot write g2_parameters.csv");
  return status;
}

int fit_saturation_cmd(json& p, Context& ctx) {
  const auto fit = fit_saturation(read_saturation_csv(input_path(p, "input", ctx)));
  write_json(ctx.output("fit_saturation.json"), to_json(fit));
  return fit_status(fit);
}

// ---------------------------------------------------------------------------
// Spin simulation

struct SpinSetup {
  DriveConfig drive;
  DissipatorSet diss;
  SweepOptions sweep;
  std::vector<double> freqs;
  std::vector<double> couplings;
};

SpinSetup spin_setup(json& p, const Context& ctx) {
  SpinSetup s;
  s.drive.D = take(p, "D", 35.0);
  s.drive.duration = take(p, "duration_us", 1.5);
  s.couplings = number_list(p, "Omega1", {2.0});
  s.diss = DissipatorSet::build(take(p, "alpha", 7.0), take(p, "beta", 2.5), take(p, "delta", 185.0));
  json& grid = p["grid"];
  if (grid.is_null()) grid = json::object();
  s.freqs = frequency_grid(take(grid, "start", 15.0), take(grid, "stop", 90.0), take(grid, "step", 0.5));

  const std::string ordering = take<std::string>(p, "ordering", "canonical");
  if (ordering == "canonical") {
    s.sweep.ordering = DissipatorOrdering::canonical;
  } else if (ordering == "adjoint_jump") {
    s.sweep.ordering = DissipatorOrdering::adjoint_jump;
  } else {
    throw ConfigurationError("ordering must be canonical or adjoint_jump");
  }
  const std::string observable = take<std::string>(p, "observable", "mean");
  if (observable == "mean") {
    s.sweep.observable = ContrastObservable::mean_half_population;
  } else if (observable == "final") {
    s.sweep.observable = ContrastObservable::final_half_population;
  } else {
    throw ConfigurationError("observable must be mean or final");
  }
  s.sweep.normalize = take(p, "normalize", true);
  s.sweep.evolve.abs_tol = take(p, "abs_tol", 1e-11);
  s.sweep.evolve.rel_tol = take(p, "rel_tol", 1e-9);
  s.sweep.jobs = ctx.jobs;
  return s;
}

std::string spectrum_name(double omega1) { return "spectrum_omega1_" + format_double(omega1) + ".csv"; }

void write_peak_row(std::ostream& out, double omega1, const FitResult& fit) {
  out << format_double(omega1);
  for (int k = 1; k <= 3; ++k) {
    for (const char* q : {"center_", "fwhm_", "amplitude_"}) {
      const auto& e = fit[q + std::to_string(k)];
      out << ',' << format_double(e.value) << ',' << format_double(e.uncertainty);
    }
  }
  out << '\n';
}

const char* kPeakHeader =
    "omega1_mhz,center_1_mhz,center_1_sigma,fwhm_1_mhz,fwhm_1_sigma,amplitude_1,amplitude_1_sigma,"
    "center_2_mhz,center_2_sigma,fwhm_2_mhz,fwhm_2_sigma,amplitude_2,amplitude_2_sigma,"
    "center_3_mhz,center_3_sigma,fwhm_3_mhz,fwhm_3_sigma,amplitude_3,amplitude_3_sigma\n";

int simulate_odmr(json& p, Context& ctx) {
  const SpinSetup s = spin_setup(p, ctx);
  const double D = s.drive.D;
  std::ofstream peaks(ctx.output("peaks.csv"));
  peaks << kPeakHeader;
  json runs = json::array();
  InvariantReport total;
  for (double omega1 : s.couplings) {
    DriveConfig cfg = s.drive;
    cfg.Omega1 = omega1;
    const auto sim = odmr_sweep(s.freqs, cfg, s.diss, s.sweep);
    total.merge(sim.invariants);
    write_spectrum_csv(ctx.output(spectrum_name(omega1)), sim.spectrum);
    json run = {{"Omega1", omega1}, {"normalization", sim.normalization}, {"invariants", to_json(sim.invariants)}};
    if (omega1 > 0.0) {
      const auto fit = fit_lorentzians(sim.spectrum, 3, {2 * D, D, 2 * D / 3});
      write_peak_row(peaks, omega1, fit);
      run["lorentzians"] = to_json(fit);
    }
    runs.push_back(run);
  }
  if (!peaks) throw IoError("cannot write peaks.csv");
  write_json(ctx.output("simulate_odmr.json"), {{"runs", runs}, {"invariants", to_json(total)}});
  return kOk;
}

int linewidth_scan_cmd(json& p, Context& ctx) {
  if (!p.contains("Omega1")) p["Omega1"] = json::array({2, 3, 4, 5, 6, 8});
  const SpinSetup s = spin_setup(p, ctx);
  LinewidthScanOptions opt;
  opt.freqs_mhz = s.freqs;
  opt.sweep = s.sweep;
  const auto scan = linewidth_scan(s.couplings, s.drive, s.diss, opt);

  std::ofstream table(ctx.output("linewidth.csv"));
  table << "omega1_mhz,fwhm_1_mhz,fwhm_1_sigma,resolved_1,fwhm_2_mhz,fwhm_2_sigma,resolved_2,fwhm_3_mhz,"
           "fwhm_3_sigma,resolved_3\n";
  for (const auto& row : scan.rows) {
    table << format_double(row.Omega1);
    for (int k = 0; k < 3; ++k) {
      const auto& e = row.spectrum_fit["fwhm_" + std::to_string(k + 1)];
      table << ',' << format_double(e.value) << ',' << format_double(e.uncertainty) << ','
            << (row.resolved[static_cast<std::size_t>(k)] ? 1 : 0);
    }
    table << '\n';
  }
  if (!table) throw IoError("cannot write linewidth.csv");
  for (std::size_t i = 0; i < scan.spectra.size(); ++i) {
    write_spectrum_csv(ctx.output(spectrum_name(scan.rows[i].Omega1)), scan.spectra[i].spectrum);
  }
  json out = {{"one_photon", to_json(scan.one_photon)},
              {"two_photon", to_json(scan.two_photon)},
              {"invariants", to_json(scan.invariants)}};
  write_json(ctx.output("linewidth_scan.json"), out);
  const bool ok = scan.one_photon.converged && scan.two_photon.converged;
  return ok ? kOk : kNoConvergence;
}

// ---------------------------------------------------------------------------
// Measured spectra

int fit_odmr(json& p, Context& ctx) {
  const int n_peaks = take(p, "peaks", 2);
  const auto seeds = take(p, "seeds", std::vector<double>{72.0, 36.0, 24.0});
  if (!p.contains("series")) {
    const auto fit = fit_lorentzians(read_spectrum_csv(input_path(p, "input", ctx)), n_peaks, seeds);
    write_json(ctx.output("fit_odmr.json"), to_json(fit));
    return fit_status(fit);
  }

  const auto entries = read_series_manifest(input_path(p, "series", ctx));
  std::vector<PowerPoint> amp1, amp2, lw1, lw2;
  json spectra = json::array();
  int status = kOk;
  std::ofstream table(ctx.output("odmr_power_table.csv"));
  table << "rf_power_w,center_1_mhz,fwhm_1_mhz,fwhm_1_sigma,amplitude_1,amplitude_1_sigma,center_2_mhz,fwhm_2_mhz,"
           "fwhm_2_sigma,amplitude_2,amplitude_2_sigma\n";
  for (const auto& e : entries) {
    ctx.manifest.inputs.push_back(e.file.string());
    const auto spectrum = read_spectrum_csv(e.file);
    const double power = e.rf_power_w ? *e.rf_power_w : spectrum.rf_power_w;
    const auto fit = fit_lorentzians(spectrum, n_peaks, seeds);
    if (!fit.converged) status = kNoConvergence;
    amp1.push_back({power, fit["amplitude_1"].value, fit["amplitude_1"].uncertainty});
    amp2.push_back({power, fit["amplitude_2"].value, fit["amplitude_2"].uncertainty});
    lw1.push_back({power, fit["fwhm_1"].value, fit["fwhm_1"].uncertainty});
    lw2.push_back({power, fit["fwhm_2"].value, fit["fwhm_2"].uncertainty});
    table << format_double(power);
    for (int k = 1; k <= 2; ++k) {
      const std::string s = std::to_string(k);
      table << ',' << format_double(fit["center_" + s].value) << ',' << format_double(fit["fwhm_" + s].value) << ','
            << format_double(fit["fwhm_" + s].uncertainty) << ',' << format_double(fit["amplitude_" + s].value)
            << ',' << format_double(fit["amplitude_" + s].uncertainty);
    }
    table << '\n';
    spectra.push_back({{"file", e.file.string()}, {"rf_power_w", power}, {"fit", to_json(fit)}});
  }
  if (!table) throw IoError("cannot write odmr_power_table.csv");

  const bool weighted = take(p, "weighted", true);
  if (!weighted) {
    for (auto* v : {&amp1, &amp2, &lw1, &lw2}) {
      for (auto& pt : *v) pt.sigma = 0.0;
    }
  }
  json laws;
  auto record = [&](const char* name, const FitResult& f) {
    if (!f.converged) status = kNoConvergence;
    laws[name] = to_json(f);
  };
  record("amplitude_1", fit_amplitude_vs_power(amp1, 1));
  record("amplitude_2", fit_amplitude_vs_power(amp2, 2));
  record("linewidth_1", fit_linewidth_vs_power(lw1));
  record("linewidth_2", fit_linewidth_vs_power(lw2));
  write_json(ctx.output("fit_odmr.json"), {{"power_laws", laws}, {"spectra", spectra}});
  return status;
}

// ---------------------------------------------------------------------------

using Handler = std::function<int(json&, Context&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> h = {
      {"simulate-g2", simulate_g2},       {"fit-g2", fit_g2_cmd},
      {"global-fit", global_fit_cmd},     {"fit-saturation", fit_saturation_cmd},
      {"simulate-odmr", simulate_odmr},   {"fit-odmr", fit_odmr},
      {"linewidth-scan", linewidth_scan_cmd}};
  return h;
}

void write_diagnostics(Context& ctx, const std::string& kind, const std::string& message) {
  try {
    fs::create_directories(ctx.out_dir);
    json d = {{"command", ctx.manifest.command}, {"error", kind}, {"message", message}};
    write_json(ctx.out_dir / (ctx.manifest.command + ".error.json"), d);
  } catch (const std::exception&) {
  }
}

int execute(const std::string& command, json params, const fs::path& out_dir, unsigned jobs) {
  Context ctx;
  ctx.out_dir = out_dir;
  ctx.jobs = jobs;
  ctx.manifest.command = command;
  try {
    const auto it = handlers().find(command);
    if (it == handlers().end()) throw ConfigurationError("unknown command '" + command + "'");
    fs::create_directories(out_dir);
    const int status = it->second(params, ctx);
    ctx.manifest.parameters = params;
    ctx.manifest.outputs.push_back(command + ".manifest.json");
    write_json(out_dir / (command + ".manifest.json"), to_json(ctx.manifest));
    if (status == kNoConvergence) std::cerr << command << ": a fit did not converge; see outputs\n";
    return status;
  } catch (const IoError& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return kIo;
  } catch (const RankDeficiencyError& e) {
    std::cerr << command << ": " << e.what() << '\n';
    write_diagnostics(ctx, "rank_deficiency:" + e.direction(), e.what());
    return kNoConvergence;
  } catch (const IntegrationError& e) {
    std::cerr << command << ": " << e.what() << '\n';
    write_diagnostics(ctx, "integration", e.what());
    return kNoConvergence;
  } catch (const ParseError& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return kInvalid;
  } catch (const Error& e) {
    std::cerr << command << ": " << e.what() << '\n';
    return kInvalid;
  } catch (const json::exception& e) {
    std::cerr << command << ": invalid configuration: " << e.what() << '\n';
    return kInvalid;
  }
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = read_json(path);
  if (!j.is_object()) throw ParseError(path + ": configuration must be a JSON object");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photospin: photon statistics and spin resonance pipeline"};
  app.set_version_flag("--version", std::string(PHOTOSPIN_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_flag;
  unsigned jobs = 0;
  app.add_option("-o,--out", out_flag, "output directory (default: $PHOTOSPIN_OUT or .)");
  app.add_option("-j,--jobs", jobs, "worker threads for sweeps (0: all cores)");

  std::string config;
  std::string input, series, tags, saturation;
  std::optional<std::string> model;
  std::optional<std::uint64_t> seed;
  bool visibility = false;
  std::optional<int> peaks;

  std::map<std::string, CLI::App*> subs;
  auto sub = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("-c,--config", config, "JSON configuration file");
    subs[name] = s;
    return s;
  };
  sub("simulate-g2", "simulate a time-tag record and its g2 curve")->add_option("--seed", seed, "random seed");
  {
    auto* s = sub("fit-g2", "fit one g2 curve (CSV) or time-tag file");
    s->add_option("input", input, "curve CSV");
    s->add_option("--tags", tags, "time-tag file instead of a curve");
    s->add_flag("--visibility", visibility, "fit a visibility for uncorrected background");
  }
  {
    auto* s = sub("global-fit", "intensity series of g2 curves -> photophysical rates");
    s->add_option("series", series, "series manifest (JSON)");
    s->add_option("--model", model, "three_level|four_level");
    s->add_option("--saturation", saturation, "saturation table for background correction");
    s->add_flag("--visibility", visibility, "fit a visibility per curve");
  }
  sub("fit-saturation", "PL saturation and background")->add_option("input", input, "saturation CSV");
  sub("simulate-odmr", "master-equation ODMR spectra");
  {
    auto* s = sub("fit-odmr", "Lorentzian fits of one spectrum or an RF power series");
    s->add_option("input", input, "spectrum CSV");
    s->add_option("--series", series, "power series manifest (JSON)");
    s->add_option("--peaks", peaks, "number of Lorentzians (2 or 3)");
  }
  sub("linewidth-scan", "ODMR linewidths versus RF coupling");
  std::string rerun_manifest;
  app.add_subcommand("rerun", "replay a run manifest")->add_option("manifest", rerun_manifest)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  fs::path out_dir = ".";
  if (const char* env = std::getenv("PHOTOSPIN_OUT"); env && *env) out_dir = env;
  if (!out_flag.empty()) out_dir = out_flag;

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  json params;
  std::string run_command = command;
  try {
    if (command == "rerun") {
      const json m = read_json(rerun_manifest);
      run_command = m.at("command").get<std::string>();
      params = m.at("parameters");
    } else {
      params = load_config(config);
      auto set = [&](const char* key, const std::string& v) {
        if (!v.empty()) params[key] = v;
      };
      set("input", input);
      set("series", series);
      set("tags", tags);
      set("saturation", saturation);
      if (model) params["model"] = *model;
      if (seed) params["seed"] = *seed;
      if (visibility) params["visibility"] = true;
      if (peaks) params["peaks"] = *peaks;
    }
  } catch (const IoError& e) {
    std::cerr << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kInvalid;
  }
  return execute(run_command, std::move(params), out_dir, jobs);
}
