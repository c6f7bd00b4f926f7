#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvvm/study.hpp"
#include "mvvm/vtk.hpp"

namespace {

struct MeshGenArgs
{
    int           nx = 4, ny = 4;
    double        distortion = 0.2;
    double        split_fraction = 0.25;
    std::uint64_t seed = 1;
    std::string   out;
};

struct SolveArgs
{
    std::string mesh;
    int         order = 0;
    std::string case_name = "sine-coefficient";
    std::string out_prefix;
    std::string vtk;
};

struct StudyArgs
{
    int           order = 0;
    int           levels = 5;
    std::string   family = "distorted";
    std::string   case_name = "sine-coefficient";
    std::uint64_t seed = 1;
    std::string   csv;
};

mvvm::PolyMesh load_or_default(const std::string& path)
{
    return path.empty() ? mvvm::generate_distorted_polygonal({}) : mvvm::read_mesh(path);
}

void print_row(const mvvm::ConvergenceRow& r, bool with_rt)
{
    std::cout << r.elements << " cells  h " << mvvm::format_sci(r.h) << "  |u| " << mvvm::format_sci(r.error_u)
              << "  |p| " << mvvm::format_sci(r.error_p) << "  |grad p| " << mvvm::format_sci(r.error_grad_p)
              << "  |div| " << mvvm::format_sci(r.error_div);
    if (with_rt) std::cout << "  |u_rt| " << mvvm::format_sci(r.error_rt);
    std::cout << '\n';
}

void print_table(const std::vector<mvvm::ConvergenceRow>& rows, bool rt)
{
    rt ? mvvm::write_rt_csv(std::cout, rows) : mvvm::write_convergence_csv(std::cout, rows);
}

mvvm::MeshFamily family_of(const StudyArgs& a)
{
    mvvm::MeshFamily f;
    f.kind = mvvm::parse_family(a.family);
    f.seed = a.seed;
    return f;
}

int run_study(const StudyArgs& a, bool rt)
{
    std::vector<mvvm::ConvergenceRow> rows;
    try
    {
        rows = rt ? mvvm::rt_comparison_study(a.levels, family_of(a))
                  : mvvm::convergence_study(mvvm::make_case(a.case_name), a.order, family_of(a), a.levels);
    }
    catch (const mvvm::StudyAborted& e)
    {
        if (!a.csv.empty()) mvvm::write_csv_file(a.csv, e.rows, rt);
        print_table(e.rows, rt);
        std::cerr << "error: study aborted at " << e.what() << '\n';
        return 2;
    }
    if (!a.csv.empty()) mvvm::write_csv_file(a.csv, rows, rt);
    print_table(rows, rt);
    return 0;
}

// Keys outside any [section] belong to the subcommand named on the command line.
class SubcommandConfig : public CLI::ConfigINI
{
public:
    explicit SubcommandConfig(const CLI::App& app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        std::vector<CLI::ConfigItem> items = CLI::ConfigINI::from_config(input);
        std::vector<std::string>     path;
        for (const CLI::App* a = &app_; !a->get_subcommands().empty();)
        {
            a = a->get_subcommands().front();
            path.push_back(a->get_name());
        }
        for (auto& item : items)
            if (item.parents.empty() && item.name != "++" && item.name != "--") item.parents = path;
        return items;
    }

private:
    const CLI::App& app_;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mixed virtual volume solver for -div(K grad p) = f on polygonal meshes"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key = value file supplying any flag; flags on the command line win");
    app.config_formatter(std::make_shared<SubcommandConfig>(app));
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);

    MeshGenArgs gen;
    auto*       mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
    mesh_cmd->require_subcommand(1);
    auto* gen_cmd = mesh_cmd->add_subcommand("gen", "generate a distorted polygonal mesh of the unit square");
    gen_cmd->add_option("--nx", gen.nx, "cells in x")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--ny", gen.ny, "cells in y")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--distortion", gen.distortion, "vertex jitter relative to the cell size")
        ->check(CLI::Range(0.0, 0.45));
    gen_cmd->add_option("--split-fraction", gen.split_fraction, "probability of a midside vertex on an edge")
        ->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--seed", gen.seed, "random seed");
    gen_cmd->add_option("--out", gen.out, "output mesh file")->required();

    SolveArgs solve;
    auto*     solve_cmd = app.add_subcommand("solve", "solve one case and write error summary and fields");
    solve_cmd->add_option("--mesh", solve.mesh, "mesh file (default: 4x4 distorted)");
    solve_cmd->add_option("--order,-k", solve.order, "polynomial order k")->check(CLI::Range(0, 6));
    solve_cmd->add_option("--case", solve.case_name, "manufactured case");
    solve_cmd->add_option("--out-prefix", solve.out_prefix, "writes PREFIX.csv and PREFIX.vtk")->required();

    StudyArgs conv;
    auto*     conv_cmd = app.add_subcommand("converge", "convergence study over a refined mesh family");
    conv_cmd->add_option("--order,-k", conv.order, "polynomial order k")->check(CLI::Range(0, 6));
    conv_cmd->add_option("--levels", conv.levels, "number of refinement levels")->check(CLI::Range(3, 8));
    conv_cmd->add_option("--family", conv.family, "uniform or distorted")
        ->check(CLI::IsMember({"uniform", "distorted"}));
    conv_cmd->add_option("--case", conv.case_name, "manufactured case");
    conv_cmd->add_option("--seed", conv.seed, "seed of the distorted family");
    conv_cmd->add_option("--csv", conv.csv, "CSV output path");

    StudyArgs rt;
    auto*     rt_cmd = app.add_subcommand("rt-compare", "k = 0 projection against the reconstructed velocity");
    rt_cmd->add_option("--levels", rt.levels, "number of refinement levels")->check(CLI::Range(3, 8));
    rt_cmd->add_option("--family", rt.family, "uniform or distorted")->check(CLI::IsMember({"uniform", "distorted"}));
    rt_cmd->add_option("--seed", rt.seed, "seed of the distorted family");
    rt_cmd->add_option("--csv", rt.csv, "CSV output path");

    SolveArgs exp;
    auto*     export_cmd = app.add_subcommand("export", "solve and export cell fields as legacy VTK");
    export_cmd->add_option("--vtk", exp.vtk, "output VTK path")->required();
    export_cmd->add_option("--mesh", exp.mesh, "mesh file (default: 4x4 distorted)");
    export_cmd->add_option("--order,-k", exp.order, "polynomial order k")->check(CLI::Range(0, 6));
    export_cmd->add_option("--case", exp.case_name, "manufactured case");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (gen_cmd->parsed())
        {
            const auto mesh = mvvm::generate_distorted_polygonal({gen.nx, gen.ny, gen.seed, gen.distortion, gen.split_fraction});
            mvvm::write_mesh(gen.out, mesh);
            std::cout << "wrote " << gen.out << ": " << mesh.num_vertices() << " vertices, " << mesh.num_cells()
                      << " cells\n";
        }
        else if (solve_cmd->parsed())
        {
            const auto mesh   = load_or_default(solve.mesh);
            const auto c      = mvvm::make_case(solve.case_name);
            const auto result = mvvm::run_pipeline(mesh, c, solve.order);
            const auto row    = mvvm::error_norms(result, c);

            std::ofstream csv(solve.out_prefix + ".csv");
            if (!csv) throw std::runtime_error("cannot write " + solve.out_prefix + ".csv");
            csv << "elements,h,error_u,error_p,error_grad_p,error_div,error_rt,solver_iterations,relative_residual,"
                   "flux_mismatch,divergence_mismatch,conservation_error\n"
                << row.elements << ',' << mvvm::format_sci(row.h) << ',' << mvvm::format_sci(row.error_u) << ','
                << mvvm::format_sci(row.error_p) << ',' << mvvm::format_sci(row.error_grad_p) << ','
                << mvvm::format_sci(row.error_div) << ',' << mvvm::format_sci(row.error_rt) << ','
                << result.solve.iterations << ',' << mvvm::format_sci(result.solve.relative_residual) << ','
                << mvvm::format_sci(result.velocity.checks.max_flux_mismatch) << ','
                << mvvm::format_sci(result.velocity.checks.max_divergence_error) << ','
                << mvvm::format_sci(result.velocity.checks.conservation_error) << '\n';
            mvvm::export_vtk(solve.out_prefix + ".vtk", result.disc, result.velocity);
            print_row(row, solve.order == 0);
        }
        else if (conv_cmd->parsed())
        {
            return run_study(conv, false);
        }
        else if (rt_cmd->parsed())
        {
            return run_study(rt, true);
        }
        else if (export_cmd->parsed())
        {
            const auto mesh   = load_or_default(exp.mesh);
            const auto c      = mvvm::make_case(exp.case_name);
            const auto result = mvvm::run_pipeline(mesh, c, exp.order);
            mvvm::export_vtk(exp.vtk, result.disc, result.velocity);
            std::cout << "wrote " << exp.vtk << '\n';
        }
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
