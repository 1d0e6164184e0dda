#include "hpep/cli/commands.hpp"

#include "hpep/analysis.hpp"
#include "hpep/cli/checks.hpp"
#include "hpep/cli/config.hpp"
#include "hpep/cli/vtk.hpp"
#include "hpep/errors.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <ostream>
#include <sstream>

namespace hpep::cli {

namespace {

namespace fs = std::filesystem;

ProblemConfig prepare(const CommandOptions& opts)
{
    ProblemConfig cfg = load_config(opts.config_path, process_environment());
    if (opts.out_dir)
        cfg.output_dir = *opts.out_dir;
    if (opts.verbose)
        cfg.solver.verbose = true;
    return cfg;
}

fs::path output_directory(const ProblemConfig& cfg)
{
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw ConfigError("cannot use output directory '" + cfg.output_dir + "'");
    return dir;
}

/// Maps library exceptions to exit codes.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn)
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SingularMatrixError& e) {
        err << "solver error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "unexpected error: " << e.what() << '\n';
        return kConfigError;
    }
}

std::string iteration_log(const SolveReport& rep)
{
    std::ostringstream log;
    log.precision(6);
    log << std::scientific;
    for (const auto& r : rep.history)
        log << r.k << ' ' << r.residual << ' ' << r.n_active << ' ' << r.n_inactive << '\n';
    return log.str();
}

std::string complementarity_text(const ComplementarityReport& rep)
{
    std::ostringstream s;
    s << "nodes " << rep.nodes.size() << "\nplastic " << rep.n_plastic << "\non_yield_surface " << rep.n_on_sphere
      << "\nviolations " << rep.n_failed() << "\nmax_bound_violation " << format_double(rep.max_bound_violation)
      << "\nmax_gap " << format_double(rep.max_gap) << '\n';
    for (std::size_t i = 0; i < rep.nodes.size(); ++i) {
        const auto& n = rep.nodes[i];
        if (n.ok())
            continue;
        s << "node " << i << " |lambda| " << format_double(n.lambda_norm) << " |p| " << format_double(n.p_norm)
          << (n.feasible ? "" : " infeasible") << (n.complementary ? "" : " gap") << (n.inactive_ok ? "" : " inactive")
          << (n.parallel_ok ? "" : " not-parallel") << '\n';
    }
    return s.str();
}

} // namespace

int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err, RunArtifacts* artifacts)
{
    return guarded(err, [&]() -> int {
        const ProblemConfig cfg = prepare(opts);
        const fs::path dir = output_directory(cfg);
        const Problem pr = build_problem(cfg);
        SolverConfig sc = cfg.solver;
        sc.log = &out;
        const LevelSolution sol = solve_problem(pr.mesh, pr.material, pr.loads, sc);
        const auto comp =
            check_complementarity(sol.dofs->sigma_weights(), sol.report.state.b, sol.report.state.c, DofSystem::L);

        RunArtifacts art{(dir / "solution.vtk").string(), "", (dir / "iterations.log").string()};
        std::ostringstream vtk;
        write_vtk(vtk, sol.fields);
        write_file_atomic(art.vtk, vtk.str());
        write_file_atomic(art.log, iteration_log(sol.report));
        write_file_atomic((dir / "complementarity.txt").string(), complementarity_text(comp));
        if (artifacts)
            *artifacts = art;

        out << "elements " << pr.mesh.num_elements() << ", unknowns " << sol.dofs->u_size() + 2 * sol.dofs->q_size()
            << '\n';
        out << "newton steps " << sol.report.iterations << ", iterates " << sol.report.history.size() << ", |F| "
            << format_double(sol.report.residual) << '\n';
        out << "plastic nodes " << comp.n_plastic << " of " << comp.nodes.size() << ", complementarity violations "
            << comp.n_failed() << '\n';
        if (!sol.report.converged) {
            err << "newton iteration did not converge: " << sol.report.message << '\n';
            return kNotConverged;
        }
        return kOk;
    });
}

int cmd_study(const CommandOptions& opts, std::ostream& out, std::ostream& err, RunArtifacts* artifacts)
{
    return guarded(err, [&]() -> int {
        const ProblemConfig cfg = prepare(opts);
        const fs::path dir = output_directory(cfg);
        StudyOptions so;
        so.levels = cfg.levels;
        so.reference = cfg.reference;
        so.solver = cfg.solver;
        so.solver.verbose = false;
        so.auxiliary = cfg.auxiliary;
        bool all_converged = true;
        for (int degree : cfg.degrees) {
            const Problem pr = build_problem(cfg, degree);
            const ConvergenceStudy st = run_convergence_study(pr, so);
            std::ostringstream csv;
            write_study_csv(csv, st);
            const std::string path = (dir / ("study_p" + std::to_string(degree) + ".csv")).string();
            write_file_atomic(path, csv.str());
            if (artifacts)
                artifacts->csv = path;
            out << "degree " << degree << " (" << (st.monotone ? "monotone" : "NOT monotone") << ")\n" << csv.str();
            for (const auto& lv : st.levels)
                all_converged = all_converged && lv.converged;
        }
        if (!all_converged) {
            err << "newton iteration did not converge on at least one level\n";
            return kNotConverged;
        }
        return kOk;
    });
}

int cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&]() -> int {
        const ProblemConfig cfg = prepare(opts);
        const auto results = run_checks(cfg, opts.groups);
        bool ok = true;
        for (const auto& r : results) {
            out << r.name << ": " << (r.passed ? "PASS" : "FAIL") << " (" << r.detail << ")\n";
            ok = ok && r.passed;
        }
        out << (ok ? "all groups passed" : "some groups failed") << '\n';
        return ok ? kOk : kCheckFailed;
    });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"hp finite elements for elastoplasticity with kinematic hardening", "hpep"};
    app.require_subcommand(1);
    CommandOptions opts;
    std::vector<std::string> groups;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", opts.config_path, "problem configuration file")->required();
        sub->add_flag("--verbose", opts.verbose, "print one line per Newton iterate");
        sub->add_option("--out", opts.out_dir, "output directory (overrides [output] dir)");
    };
    CLI::App* solve = app.add_subcommand("solve", "solve one problem and write VTK, iteration log, complementarity");
    CLI::App* study = app.add_subcommand("study", "run a convergence study and write CSV");
    CLI::App* check = app.add_subcommand("check", "run the invariant suite");
    add_common(solve);
    add_common(study);
    add_common(check);
    check->add_option("--group", groups, "restrict to groups (quadrature, geometry, biorth, jacobian, "
                                         "complementarity, lambda)")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kConfigError;
    }
    opts.groups = groups;
    if (*solve)
        return cmd_solve(opts, out, err);
    if (*study)
        return cmd_study(opts, out, err);
    return cmd_check(opts, out, err);
}

} // namespace hpep::cli
