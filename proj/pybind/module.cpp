#include "rjmlt/cli.hpp"
#include "rjmlt/image.hpp"
#include "rjmlt/integrator.hpp"
#include "rjmlt/jump.hpp"
#include "rjmlt/oned.hpp"
#include "rjmlt/statistics.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace rjmlt;

namespace {

py::array_t<double> imageToArray(const Image &img)
{
    py::array_t<double> a({img.height(), img.width(), 3});
    auto r = a.mutable_unchecked<3>();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const Vec3 &p = img.at(x, y);
            r(y, x, 0) = p.x;
            r(y, x, 1) = p.y;
            r(y, x, 2) = p.z;
        }
    return a;
}

Image arrayToImage(const py::array_t<double, py::array::c_style | py::array::forcecast> &a)
{
    if (a.ndim() != 3 || a.shape(2) != 3)
        throw std::invalid_argument("expected an array of shape (height, width, 3)");
    Image img(int(a.shape(1)), int(a.shape(0)));
    auto r = a.unchecked<3>();
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            img.at(x, y) = Vec3(r(y, x, 0), r(y, x, 1), r(y, x, 2));
    return img;
}

MltOptions makeOptions(Algorithm algorithm, int64_t mutations, uint64_t seed, int kMax,
        int bootstrapSize, int threads, const std::optional<std::array<double, 3>> &mix)
{
    MltOptions opts;
    opts.mutations = mutations;
    opts.seed = seed;
    opts.kMax = kMax;
    opts.bootstrapSize = bootstrapSize;
    opts.threads = threads;
    opts.mix = mix ? PerturbationMix{(*mix)[0], (*mix)[1], (*mix)[2]} : defaultMix(algorithm);
    opts.mix.validate();
    return opts;
}

} // namespace

PYBIND11_MODULE(_rjmlt, m)
{
    m.doc() = "Reversible jump Metropolis light transport sampling library";

    py::class_<ChiSquareResult>(m, "ChiSquareResult")
        .def_readonly("statistic", &ChiSquareResult::statistic)
        .def_readonly("dof", &ChiSquareResult::dof)
        .def_readonly("p_value", &ChiSquareResult::pValue)
        .def("__repr__", [](const ChiSquareResult &r) {
            return "ChiSquareResult(statistic=" + std::to_string(r.statistic)
                    + ", dof=" + std::to_string(r.dof)
                    + ", p_value=" + std::to_string(r.pValue) + ")";
        });

    py::class_<KindStats>(m, "KindStats")
        .def_readonly("proposed", &KindStats::proposed)
        .def_readonly("accepted", &KindStats::accepted)
        .def("acceptance_rate", &KindStats::acceptanceRate)
        .def("mean_r", &KindStats::meanR);

    py::class_<ChainStats>(m, "ChainStats")
        .def_readonly("large", &ChainStats::large)
        .def_readonly("small", &ChainStats::small)
        .def_readonly("small_tech", &ChainStats::smallTech)
        .def_readonly("jump", &ChainStats::jump)
        .def_readonly("jump_verify_fail", &ChainStats::jumpVerifyFail)
        .def_readonly("jump_non_invertible", &ChainStats::jumpNonInvertible)
        .def_readonly("max_jump_residual", &ChainStats::maxJumpResidual)
        .def_readonly("steps", &ChainStats::steps);

    py::class_<RenderStats>(m, "RenderStats")
        .def_readonly("algorithm", &RenderStats::algorithm)
        .def_readonly("seed", &RenderStats::seed)
        .def_readonly("k_max", &RenderStats::kMax)
        .def_readonly("brightness", &RenderStats::brightness)
        .def_readonly("per_length_b", &RenderStats::perLengthB)
        .def_readonly("budgets", &RenderStats::budgets)
        .def_readonly("per_length", &RenderStats::perLength);

    m.def("interval_inverse", [](double a, double b, double gamma) {
        return intervalInverse(a, b, gamma);
    }, py::arg("a"), py::arg("b"), py::arg("gamma"),
       "Place a unit draw inside [a, b); returns (u, width).");

    m.def("metropolis_acceptance", &metropolisAcceptance,
          py::arg("c_current"), py::arg("c_proposed"), py::arg("t_forward") = 1.0,
          py::arg("t_reverse") = 1.0, py::arg("jacobian") = 1.0);

    m.def("jump_acceptance", &jumpAcceptance,
          py::arg("c_from"), py::arg("c_to"), py::arg("t_forward"), py::arg("t_reverse"),
          py::arg("jac_from_inverse"), py::arg("jac_to_inverse"),
          py::arg("mixture_factor") = 1.0);

    m.def("sample_index", [](const std::vector<double> &weights, double xi) {
        return sampleIndex(weights, xi);
    }, py::arg("weights"), py::arg("xi"));

    m.def("gamma_p", &gammaP, py::arg("a"), py::arg("x"));
    m.def("gamma_q", &gammaQ, py::arg("a"), py::arg("x"));

    m.def("chi_square_test", [](const std::vector<int64_t> &observed,
            const std::vector<double> &expected, int64_t nSamples, double minExpected) {
        return chiSquareTest(observed, expected, nSamples, minExpected);
    }, py::arg("observed"), py::arg("expected"), py::arg("n_samples"),
       py::arg("min_expected") = 5.0);

    m.def("path_trace", [](const std::string &scene, int spp, uint64_t seed, int kMax,
            int threads) {
        Scene s = Scene::load(scene);
        Image img;
        {
            py::gil_scoped_release release;
            img = pathTraceReference(s, spp, seed, kMax, threads);
        }
        return imageToArray(img);
    }, py::arg("scene"), py::arg("spp"), py::arg("seed") = 0,
       py::arg("k_max") = 10, py::arg("threads") = 1);

    m.def("render", [](const std::string &scene, const std::string &algorithm,
            int64_t mutations, uint64_t seed, int kMax, int bootstrapSize, int threads,
            const std::optional<std::array<double, 3>> &mix) {
        Scene s = Scene::load(scene);
        Algorithm a = parseAlgorithm(algorithm);
        MltOptions opts = makeOptions(a, mutations, seed, kMax, bootstrapSize, threads, mix);
        RenderStats stats;
        Image img;
        {
            py::gil_scoped_release release;
            img = mltRender(s, a, opts, &stats);
        }
        return py::make_tuple(imageToArray(img), stats);
    }, py::arg("scene"), py::arg("algorithm"), py::arg("mutations"), py::arg("seed") = 0,
       py::arg("k_max") = 10, py::arg("bootstrap_size") = 100000, py::arg("threads") = 1,
       py::arg("mix") = std::nullopt,
       "Render a scene file with mmlt or rjmlt; returns (image, stats).");

    m.def("mse", [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a,
            const py::array_t<double, py::array::c_style | py::array::forcecast> &b) {
        return mse(arrayToImage(a), arrayToImage(b));
    }, py::arg("a"), py::arg("b"));

    m.def("relative_mse", [](const py::array_t<double, py::array::c_style | py::array::forcecast> &img,
            const py::array_t<double, py::array::c_style | py::array::forcecast> &ref) {
        return relativeMse(arrayToImage(img), arrayToImage(ref));
    }, py::arg("image"), py::arg("reference"));

    m.def("read_pfm", [](const std::string &path) { return imageToArray(readPfm(path)); },
          py::arg("path"));
    m.def("write_pfm", [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a,
            const std::string &path) { writePfm(arrayToImage(a), path); },
          py::arg("image"), py::arg("path"));
    m.def("write_ppm", [](const py::array_t<double, py::array::c_style | py::array::forcecast> &a,
            const std::string &path) { writePpm(arrayToImage(a), path); },
          py::arg("image"), py::arg("path"));

    m.def("run_cli", [](const std::vector<std::string> &args) {
        std::vector<const char *> argv;
        argv.push_back("rjmlt");
        for (const auto &a : args)
            argv.push_back(a.c_str());
        return dispatch(int(argv.size()), argv.data());
    }, py::arg("args"), "Run one CLI invocation; returns the exit code.");

    auto od = m.def_submodule("oned", "1D validation harness");

    py::class_<oned::RunResult>(od, "RunResult")
        .def_property_readonly("variant", [](const oned::RunResult &r) {
            return oned::variantName(r.variant);
        })
        .def_readonly("bins", &oned::RunResult::bins)
        .def_readonly("steps", &oned::RunResult::steps)
        .def_readonly("seed", &oned::RunResult::seed)
        .def_readonly("total_weight", &oned::RunResult::totalWeight)
        .def_readonly("state_weight", &oned::RunResult::stateWeight)
        .def_readonly("visits", &oned::RunResult::visits)
        .def_readonly("thinned", &oned::RunResult::thinned)
        .def_readonly("thinned_total", &oned::RunResult::thinnedTotal)
        .def_readonly("stats", &oned::RunResult::stats)
        .def_property_readonly("usage_weight", [](const oned::RunResult &r) {
            py::array_t<double> a({int(r.usageWeight.size()), 3});
            auto w = a.mutable_unchecked<2>();
            for (size_t b = 0; b < r.usageWeight.size(); ++b)
                for (int t = 0; t < 3; ++t)
                    w(py::ssize_t(b), t) = r.usageWeight[b][t];
            return a;
        })
        .def("merge", &oned::RunResult::merge, py::arg("other"))
        .def("chi_square", [](const oned::RunResult &r) { return oned::stateChiSquare(r); })
        .def("write_csv", [](const oned::RunResult &r, const std::string &path) {
            oned::writeCsv(r, path);
        }, py::arg("path"));

    od.def("target_density", &oned::targetDensity, py::arg("x"));
    od.def("target_normalization", &oned::targetNormalization);
    od.def("technique_pdf", &oned::techniquePdf, py::arg("tech"), py::arg("x"));
    od.def("technique_pdfs", [](double x) {
        auto p = oned::techniquePdfs(x);
        return std::vector<double>(p.begin(), p.end());
    }, py::arg("x"));
    od.def("mis_weight", &oned::misWeight, py::arg("tech"), py::arg("x"));
    od.def("expected_state_density", &oned::expectedStateDensity, py::arg("bins"));
    od.def("expected_usage", [](int bins) {
        auto w = oned::expectedUsage(bins);
        py::array_t<double> a({bins, 3});
        auto r = a.mutable_unchecked<2>();
        for (int b = 0; b < bins; ++b)
            for (int t = 0; t < 3; ++t)
                r(b, t) = w[t][b];
        return a;
    }, py::arg("bins"));

    od.def("run_variant", [](const std::string &variant, int64_t steps, uint64_t seed,
            int bins) {
        oned::Variant v = oned::parseVariant(variant);
        py::gil_scoped_release release;
        return oned::runVariant(v, steps, seed, bins);
    }, py::arg("variant"), py::arg("steps"), py::arg("seed"), py::arg("bins"),
       "Run one harness chain; variant is baseline, nojacobian, fixedpoint or full.");

    od.def("jump_once", [](int tech, const std::vector<double> &u, uint64_t seed,
            bool useJacobians, bool midpointIntervals) {
        oned::TechniqueSpace space;
        if (int(u.size()) != space.dim())
            throw std::invalid_argument("jump_once: u must have 3 dimensions");
        auto path = space.samplePath(tech, u);
        if (!path)
            throw std::invalid_argument("jump_once: technique rejected the sample vector");
        auto pdfs = oned::techniquePdfs(*path);
        JumpOptions opts;
        opts.useJacobians = useJacobians;
        opts.midpointIntervals = midpointIntervals;
        Pcg32 rng(seed);
        auto prop = reversibleJump(space, tech, u, *path, space.targetValue(*path, tech),
                pdfs, rng, opts);
        py::dict d;
        d["x"] = *path;
        d["tech_from"] = tech;
        d["tech_to"] = prop.tech;
        d["u"] = prop.u;
        d["acceptance"] = prop.acceptance;
        d["residual"] = prop.residual;
        d["verified"] = prop.record.verified;
        d["non_invertible"] = prop.nonInvertible;
        return d;
    }, py::arg("tech"), py::arg("u"), py::arg("seed") = 0,
       py::arg("use_jacobians") = true, py::arg("midpoint_intervals") = false,
       "One reversible jump from a technique/sample pair on the 1D target.");
}
