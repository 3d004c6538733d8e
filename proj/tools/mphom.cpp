#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"

using namespace mphom::cli;

namespace {

void add_quad(CLI::App* sub, QuadOptions& q) {
  sub->add_option("--quad", q.scheme, "Quadrature scheme: auto, gh, mc")->check(CLI::IsMember({"auto", "gh", "mc"}));
  sub->add_option("--nodes", q.nodes, "Gauss-Hermite nodes per dimension (0 = automatic)");
  sub->add_option("--samples", q.samples, "Monte-Carlo sample count");
  sub->add_option("--quad-seed", q.seed, "Monte-Carlo seed");
  sub->add_option("--workers", q.workers, "Worker threads (0 = hardware concurrency)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiphoton interference imaging: densities, Fisher information, estimation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file; keys are flag names, sections are subcommand names");
  app.set_version_flag("--version", kToolVersion);
  std::string out;
  bool strict = false;
  app.add_option("--out", out, "Output CSV path (relative paths go under $MPHOM_OUTPUT_DIR)");
  app.add_flag("--strict", strict, "Exit nonzero when any integral misses its error target");

  SurfaceArgs surf;
  auto* ps = app.add_subcommand("probability-surface", "Coincidence density over a momentum grid");
  ps->add_option("--l", surf.L, "Photon number L");
  ps->add_option("--x-class", surf.x_class, "Outcome class: B, UA or A");
  ps->add_option("--s", surf.s, "Source separation");
  ps->add_option("--ns", surf.ns, "Mean photon number per source");
  ps->add_option("--grid", surf.grid, "Points per axis");
  ps->add_option("--range", surf.range, "Axis half-width in sigma_k units");
  ps->add_option("--sigma-x", surf.sigma_x, "PSF width");

  FiCurveArgs fic;
  auto* fc = app.add_subcommand("fi-curve", "Per-order and total FI against separation");
  fc->add_option("--ns", fic.ns, "Mean photon number per source");
  fc->add_option("--s-grid", fic.s_grid, "Separations: a,b,c | lin:lo:hi:n | log:lo:hi:n");
  fc->add_option("--lmax", fic.lmax, "Highest photon number (0 = automatic)");
  fc->add_option("--sigma-x", fic.sigma_x, "PSF width");
  add_quad(fc, fic.quad);

  FiVsNsArgs fin;
  auto* fn = app.add_subcommand("fi-vs-ns", "Per-order and total FI against brightness");
  fn->add_option("--s", fin.s, "Source separation");
  fn->add_option("--ns-grid", fin.ns_grid, "Brightness grid: a,b,c | lin:lo:hi:n | log:lo:hi:n");
  fn->add_option("--lmax", fin.lmax, "Highest photon number");
  fn->add_option("--sigma-x", fin.sigma_x, "PSF width");
  add_quad(fn, fin.quad);

  BucketArgs bk;
  auto* bc = app.add_subcommand("bucket-compare", "Momentum-resolved against bucket FI");
  bc->add_option("--l", bk.L, "Photon number L (2, 3 or 4)");
  bc->add_option("--s-grid", bk.s_grid, "Separations: a,b,c | lin:lo:hi:n | log:lo:hi:n");
  bc->add_option("--ns", bk.ns, "Mean photon number per source");
  bc->add_option("--sigma-x", bk.sigma_x, "PSF width");
  add_quad(bc, bk.quad);

  EstimateArgs est;
  auto* es = app.add_subcommand("estimate", "Repeated maximum-likelihood trials against the bound");
  es->add_option("--true-s", est.true_s, "True separation");
  es->add_option("--ns", est.ns, "Mean photon number per source");
  es->add_option("--frames", est.frames, "Frames per trial");
  es->add_option("--trials", est.trials, "Number of trials");
  es->add_option("--seed", est.seed, "Base seed");
  es->add_option("--l-cap", est.L_cap, "Largest photon number per frame");
  es->add_option("--s-lo", est.s_lo, "Search interval lower end");
  es->add_option("--s-hi", est.s_hi, "Search interval upper end");
  es->add_option("--sigma-x", est.sigma_x, "PSF width");
  add_quad(es, est.quad);

  for (auto* sub : {ps, fc, fn, bc, es}) {
    sub->add_option("--out", out, "Output CSV path");
    sub->add_flag("--strict", strict, "Exit nonzero on non-convergence");
  }

  CLI11_PARSE(app, argc, argv);

  const std::vector<std::string> args(argv, argv + argc);
  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  CommandResult result;
  std::filesystem::path csv_path;
  try {
    csv_path = resolve_output(out, name + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string());
    if (sub == ps) result = cmd_probability_surface(surf, csv);
    else if (sub == fc) result = cmd_fi_curve(fic, csv);
    else if (sub == fn) result = cmd_fi_vs_ns(fin, csv);
    else if (sub == bc) result = cmd_bucket_compare(bk, csv);
    else result = cmd_estimate(est, csv);
    csv.close();
    if (sub == es) write_json(sidecar(csv_path, ".summary.json"), result.summary);
    write_json(sidecar(csv_path, ".manifest.json"), manifest(name, result, csv_path, args));
  } catch (const std::invalid_argument& e) {
    std::cerr << "mphom " << name << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mphom " << name << ": " << e.what() << '\n';
    return 1;
  }
  std::cout << csv_path.string() << '\n';
  if (!result.converged) {
    std::cerr << result.diagnostic;
    if (strict) return 3;
  }
  return 0;
}
