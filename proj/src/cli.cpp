#include "rjmlt/cli.hpp"
#include "rjmlt/image.hpp"
#include "rjmlt/integrator.hpp"
#include "rjmlt/log.hpp"
#include "rjmlt/oned.hpp"
#include "rjmlt/scene.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <vector>

namespace rjmlt {

namespace {

void atomicWriteText(const std::string &path, const std::string &body)
{
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp);
        out << body;
        if (!out)
            throw std::runtime_error("failed writing " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot move output to " + path);
    }
}

std::string replaceExtension(const std::string &path, const std::string &ext)
{
    auto dot = path.find_last_of('.');
    auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + ext;
    return path.substr(0, dot) + ext;
}

nlohmann::ordered_json statsToJson(const RenderStats &stats)
{
    nlohmann::ordered_json perLength = nlohmann::ordered_json::object();
    for (int k = 0; k <= stats.kMax; ++k) {
        const ChainStats &cs = stats.perLength[k];
        nlohmann::ordered_json entry;
        entry["small"] = {
            {"proposed", cs.small.proposed + cs.smallTech.proposed},
            {"accepted", cs.small.accepted + cs.smallTech.accepted},
        };
        entry["jump"] = {
            {"proposed", cs.jump.proposed},
            {"accepted", cs.jump.accepted},
            {"verified_fail", cs.jumpVerifyFail},
        };
        perLength[std::to_string(k)] = std::move(entry);
    }

    nlohmann::ordered_json root;
    root["algorithm"] = stats.algorithm;
    root["seed"] = stats.seed;
    root["per_length"] = std::move(perLength);
    root["brightness_b"] = stats.brightness;
    // Pinned so byte identical reruns stay byte identical.
    root["wall_seconds"] = 0.0;
    return root;
}

nlohmann::ordered_json emptyStatsJson(const std::string &algorithm, uint64_t seed)
{
    nlohmann::ordered_json root;
    root["algorithm"] = algorithm;
    root["seed"] = seed;
    root["per_length"] = nlohmann::ordered_json::object();
    root["brightness_b"] = 0.0;
    root["wall_seconds"] = 0.0;
    return root;
}

void writeImageOutputs(const Image &img, const std::string &outPath)
{
    writePfm(img, outPath);
    writePpm(img, replaceExtension(outPath, ".ppm"));
}

int runRender(const std::string &scenePath, const std::string &integrator,
        int64_t mutations, int spp, uint64_t seed, const std::string &outPath,
        const std::string &statsPath, int threads, int kMax, int64_t bootstrapSize,
        double pLarge, double pJump, double s1, double s2)
{
    Scene scene = Scene::load(scenePath);

    Image img;
    nlohmann::ordered_json statsJson;
    if (integrator == "pt") {
        img = pathTraceReference(scene, spp, seed, kMax, threads);
        statsJson = emptyStatsJson("pt", seed);
    } else {
        Algorithm alg = parseAlgorithm(integrator);
        MltOptions options;
        options.mutations = mutations;
        options.seed = seed;
        options.threads = threads;
        options.kMax = kMax;
        options.bootstrapSize = bootstrapSize;
        options.kelemen.s1 = s1;
        options.kelemen.s2 = s2;
        options.mix = defaultMix(alg);
        if (pLarge >= 0.0)
            options.mix.large = pLarge;
        if (pJump >= 0.0)
            options.mix.jump = pJump;
        options.mix.small = 1.0 - options.mix.large - options.mix.jump;
        RenderStats stats;
        img = mltRender(scene, alg, options, &stats);
        statsJson = statsToJson(stats);
    }

    writeImageOutputs(img, outPath);
    if (!statsPath.empty())
        atomicWriteText(statsPath, statsJson.dump(2) + "\n");
    RJMLT_LOG_INFO("render complete: %s", outPath.c_str());
    return 0;
}

int runValidate1d(const std::string &variantName, int64_t steps, int bins,
        uint64_t seed, const std::string &outPath)
{
    oned::Variant variant = oned::parseVariant(variantName);
    oned::RunResult run = oned::runVariant(variant, steps, seed, bins);
    oned::writeCsv(run, outPath);

    ChiSquareResult chi = oned::stateChiSquare(run);
    std::printf("variant=%s steps=%lld chi_square=%.9g p_value=%.9g accept_small=%.6f\n",
            variantName.c_str(), static_cast<long long>(run.stats.steps),
            chi.statistic, chi.pValue, run.stats.small.acceptanceRate());
    return 0;
}

int runCompare(const std::string &refPath, const std::string &imgPath)
{
    Image ref = readPfm(refPath);
    Image img = readPfm(imgPath);
    std::printf("mse=%.17g\n", mse(ref, img));
    std::printf("relmse=%.17g\n", relativeMse(img, ref));
    return 0;
}

int runStats(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    nlohmann::json root = nlohmann::json::parse(in);

    std::printf("algorithm=%s seed=%llu brightness_b=%.9g\n",
            root.at("algorithm").get<std::string>().c_str(),
            static_cast<unsigned long long>(root.at("seed").get<uint64_t>()),
            root.at("brightness_b").get<double>());

    const auto &perLength = root.at("per_length");
    std::vector<int> lengths;
    for (auto it = perLength.begin(); it != perLength.end(); ++it)
        lengths.push_back(std::stoi(it.key()));
    std::sort(lengths.begin(), lengths.end());
    for (int k : lengths) {
        const auto &entry = perLength.at(std::to_string(k));
        int64_t sp = entry.at("small").at("proposed").get<int64_t>();
        int64_t sa = entry.at("small").at("accepted").get<int64_t>();
        int64_t jp = entry.at("jump").at("proposed").get<int64_t>();
        int64_t ja = entry.at("jump").at("accepted").get<int64_t>();
        int64_t jf = entry.at("jump").at("verified_fail").get<int64_t>();
        double sr = sp > 0 ? double(sa)/double(sp) : 0.0;
        double jr = jp > 0 ? double(ja)/double(jp) : 0.0;
        std::printf("k=%d small=%lld/%lld (%.4f) jump=%lld/%lld (%.4f) verified_fail=%lld\n",
                k, static_cast<long long>(sa), static_cast<long long>(sp), sr,
                static_cast<long long>(ja), static_cast<long long>(jp), jr,
                static_cast<long long>(jf));
    }
    return 0;
}

}

int dispatch(int argc, const char *const *argv)
{
    CLI::App app{"reversible jump metropolis light transport"};
    app.require_subcommand(1);

    std::string scenePath, integrator = "rjmlt", outPath, statsPath;
    int64_t mutations = 1000000, bootstrapSize = 100000;
    uint64_t seed = 1;
    int spp = 16, threads = 1, kMax = 10;
    double pLarge = -1.0, pJump = -1.0, s1 = 1.0/64.0, s2 = 1.0/1024.0;

    CLI::App *render = app.add_subcommand("render", "render a scene to a PFM/PPM pair");
    render->add_option("--scene", scenePath, "scene description (json)")->required();
    render->add_option("--integrator", integrator, "mmlt, rjmlt or pt")
            ->check(CLI::IsMember({"mmlt", "rjmlt", "pt"}));
    render->add_option("--mutations", mutations, "total mutation budget (mmlt/rjmlt)");
    render->add_option("--spp", spp, "samples per pixel (pt)");
    render->add_option("--seed", seed, "rng seed");
    render->add_option("--out", outPath, "output image path (.pfm)")->required();
    render->add_option("--stats", statsPath, "write run statistics (json)");
    render->add_option("--threads", threads, "worker threads");
    render->add_option("--kmax", kMax, "maximum path length");
    render->add_option("--bootstrap", bootstrapSize, "bootstrap samples per length");
    render->add_option("--p-large", pLarge, "large step probability");
    render->add_option("--p-jump", pJump, "jump probability (rjmlt)");
    render->add_option("--s1", s1, "small step minimum offset");
    render->add_option("--s2", s2, "small step maximum offset");

    std::string variantName = "full", csvPath;
    int64_t steps = 1000000;
    int bins = 100;
    uint64_t seed1d = 1;

    CLI::App *validate = app.add_subcommand("validate1d", "run the 1d mixture chain");
    validate->add_option("--variant", variantName, "baseline, nojacobian, fixedpoint or full")
            ->check(CLI::IsMember({"baseline", "nojacobian", "fixedpoint", "full"}));
    validate->add_option("--steps", steps, "chain steps");
    validate->add_option("--bins", bins, "histogram bins");
    validate->add_option("--seed", seed1d, "rng seed");
    validate->add_option("--out", csvPath, "output csv path")->required();

    std::string refPath, imgPath;
    CLI::App *compare = app.add_subcommand("compare", "mean squared error between two PFM images");
    compare->add_option("--ref", refPath, "reference image")->required();
    compare->add_option("--img", imgPath, "test image")->required();

    std::string statsInPath;
    CLI::App *stats = app.add_subcommand("stats", "summarize a run statistics file");
    stats->add_option("--in", statsInPath, "statistics json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    try {
        if (render->parsed())
            return runRender(scenePath, integrator, mutations, spp, seed, outPath,
                    statsPath, threads, kMax, bootstrapSize, pLarge, pJump, s1, s2);
        if (validate->parsed())
            return runValidate1d(variantName, steps, bins, seed1d, csvPath);
        if (compare->parsed())
            return runCompare(refPath, imgPath);
        if (stats->parsed())
            return runStats(statsInPath);
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}
