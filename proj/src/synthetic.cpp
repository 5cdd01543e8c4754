#include "xids/data.hpp"
#include "xids/rng.hpp"

#include <array>
#include <cmath>

namespace xids {

namespace {

const std::array<const char*, 4> kProtoLevels = {"tcp", "udp", "arp", "ospf"};
const std::array<const char*, 4> kServiceLevels = {"http", "dns", "ftp", "smtp"};
const std::array<const char*, 3> kAttackBands = {"Fuzzers", "Exploits", "Generic"};

std::string categorical_name(std::size_t i) {
    if (i == 0) return "proto";
    if (i == 1) return "service";
    return "cat" + std::to_string(i);
}

}  // namespace

std::vector<std::string> synthetic_informative_names(std::size_t n_informative) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_informative; ++i) names.push_back(i == 0 ? "sttl" : "inf" + std::to_string(i));
    return names;
}

std::vector<std::string> synthetic_noise_names(std::size_t n_noise) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n_noise; ++i) names.push_back("noise" + std::to_string(i));
    return names;
}

RawTable make_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_informative < 1) throw InputError("make_synthetic needs at least one informative column");
    if (cfg.n_rows < 2) throw InputError("make_synthetic needs at least 2 rows");

    RawTable t;
    t.column_names.push_back("id");
    for (const auto& n : synthetic_informative_names(cfg.n_informative)) t.column_names.push_back(n);
    for (const auto& n : synthetic_noise_names(cfg.n_noise)) t.column_names.push_back(n);
    for (std::size_t i = 0; i < cfg.n_categorical; ++i) t.column_names.push_back(categorical_name(i));
    t.column_names.push_back("attack_cat");
    t.column_names.push_back("label");

    t.column_types.assign(t.column_names.size(), CellType::numeric);
    for (std::size_t i = 0; i < cfg.n_categorical; ++i) t.column_types[1 + cfg.n_informative + cfg.n_noise + i] = CellType::text;
    t.column_types[t.column_names.size() - 2] = CellType::text;

    // Spread of the latent score, used to place the attack-category bands.
    const double k = static_cast<double>(cfg.n_informative);
    const double latent_sd = cfg.redundant ? std::sqrt(1.0 / 12.0) : std::sqrt(1.0 / (12.0 * k));
    const double band1 = 0.5 + 0.5 * latent_sd;
    const double band2 = 0.5 + 1.2 * latent_sd;

    Rng rng(cfg.seed);
    t.rows.reserve(cfg.n_rows);
    for (std::size_t r = 0; r < cfg.n_rows; ++r) {
        std::vector<Cell> row;
        row.reserve(t.column_names.size());
        row.emplace_back(static_cast<double>(r + 1));

        double latent;
        if (cfg.redundant) {
            latent = rng.uniform();
            for (std::size_t i = 0; i < cfg.n_informative; ++i) {
                const double copy = latent + 0.08 * rng.normal();
                row.emplace_back((i == 0 ? 255.0 : 100.0) * copy);
            }
        } else {
            double sum = 0.0;
            for (std::size_t i = 0; i < cfg.n_informative; ++i) {
                const double u = rng.uniform();
                sum += u;
                row.emplace_back((i == 0 ? 255.0 : 100.0) * u);
            }
            latent = sum / k;
        }

        // Heavy-tailed, label-independent counters (bytes/packets-like).
        for (std::size_t i = 0; i < cfg.n_noise; ++i) row.emplace_back(std::round(1000.0 * std::exp(1.5 * rng.normal())));
        for (std::size_t i = 0; i < cfg.n_categorical; ++i) {
            const auto& levels = (i % 2 == 0) ? kProtoLevels : kServiceLevels;
            row.emplace_back(std::string(levels[rng.below(levels.size())]));
        }

        int label = latent > 0.5 ? 1 : 0;
        if (rng.uniform() < cfg.label_noise) label = 1 - label;
        std::string category = "Normal";
        if (label == 1) category = latent > band2 ? kAttackBands[2] : (latent > band1 ? kAttackBands[1] : kAttackBands[0]);
        row.emplace_back(std::move(category));
        row.emplace_back(static_cast<double>(label));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace xids
