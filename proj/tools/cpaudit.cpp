#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpaudit/bundle.hpp"
#include "cpaudit/domdiff.hpp"
#include "cpaudit/pipeline.hpp"
#include "cpaudit/report.hpp"

namespace fs = std::filesystem;
using namespace cpaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct InputPaths {
    std::vector<std::string> filters;  // label=path
    std::string psl;
    std::string owners;
    std::string catalog;
    std::string pii;
};

void apply_env_config(InputPaths& paths) {
    const char* cfg = std::getenv("CPAUDIT_CONFIG");
    if (!cfg) return;
    nlohmann::json doc = nlohmann::json::parse(read_file(cfg));
    if (paths.psl.empty()) paths.psl = doc.value("psl", "");
    if (paths.owners.empty()) paths.owners = doc.value("owners", "");
    if (paths.catalog.empty()) paths.catalog = doc.value("catalog", "");
    if (paths.pii.empty()) paths.pii = doc.value("pii", "");
    if (paths.filters.empty()) {
        const nlohmann::json filters = doc.value("filters", nlohmann::json::object());
        for (const auto& [label, path] : filters.items())
            paths.filters.push_back(label + "=" + path.get<std::string>());
    }
}

std::string require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw std::runtime_error("missing required " + what + " path");
    if (!fs::exists(path)) throw std::runtime_error(what + " file not found: " + path);
    return read_file(path);
}

filters::SourceLabel label_from_string(const std::string& s) {
    if (s == "advertising") return filters::SourceLabel::advertising;
    if (s == "privacy") return filters::SourceLabel::privacy;
    if (s == "social") return filters::SourceLabel::social;
    throw std::runtime_error("unknown filter list label: " + s +
                             " (expected advertising, privacy, or social)");
}

pipeline::AnalysisConfig load_config(InputPaths& paths) {
    apply_env_config(paths);
    pipeline::AnalysisConfig config;

    std::string psl_text = require_file(paths.psl, "PSL");
    config.psl = domains::parse_psl(psl_text).rules;
    config.input_versions["psl"] = sha256_hex(psl_text).substr(0, 16);

    config.ownership = domains::OwnershipDb::from_json(require_file(paths.owners, "ownership db"));
    config.input_versions["ownership_db"] = config.ownership.version();

    config.catalog = fingerprint::ApiCatalog::from_json(require_file(paths.catalog, "API catalog"));
    config.input_versions["api_catalog"] = config.catalog.version;

    if (paths.filters.empty()) throw std::runtime_error("missing required --filters label=path");
    for (const auto& spec : paths.filters) {
        size_t eq = spec.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("bad --filters value (expected label=path): " + spec);
        std::string label = spec.substr(0, eq);
        std::string text = require_file(spec.substr(eq + 1), "filter list " + label);
        config.filter_set.add_list(text, label_from_string(label));
        config.input_versions["filters:" + label] = sha256_hex(text).substr(0, 16);
    }

    if (!paths.pii.empty()) {
        config.profile = pii::PiiProfile::from_json(require_file(paths.pii, "PII profile"));
        config.input_versions["pii_profile"] = sha256_hex(read_file(paths.pii)).substr(0, 16);
    }
    config.input_versions["identifier_min_length"] = std::to_string(config.thresholds.min_length);
    config.input_versions["identifier_min_entropy"] =
        std::to_string(config.thresholds.min_entropy_bits_per_char);
    return config;
}

report::RenderFormat format_from_string(const std::string& s) {
    if (s == "json") return report::RenderFormat::json;
    if (s == "csv") return report::RenderFormat::csv;
    if (s == "text") return report::RenderFormat::text;
    throw CLI::ValidationError("--format", "unknown format: " + s);
}

std::string extension_for(report::RenderFormat f) {
    switch (f) {
        case report::RenderFormat::json: return ".json";
        case report::RenderFormat::csv: return ".csv";
        case report::RenderFormat::text: return ".txt";
    }
    return ".json";
}

int run_analyze(const std::vector<std::string>& bundle_dirs, InputPaths& paths,
                const std::string& consent_at, const std::string& out_dir,
                const std::vector<std::string>& formats, unsigned jobs) {
    auto config = load_config(paths);

    std::optional<TimestampMs> consent;
    if (!consent_at.empty()) {
        consent = parse_iso8601(consent_at);
        if (!consent) throw std::runtime_error("bad --consent-at timestamp: " + consent_at);
    }

    std::vector<bundle::CaptureBundle> bundles(bundle_dirs.size());
    for (size_t i = 0; i < bundle_dirs.size(); ++i) {
        bundles[i] = bundle::load_bundle(bundle_dirs[i]);
        if (consent)
            bundle::mark_phase(bundles[i], *consent);
        else if (bundles[i].meta.consent_at)
            bundle::mark_phase(bundles[i], *bundles[i].meta.consent_at);
    }

    // worker pool over bundles; results slotted by index for determinism
    std::vector<report::BundleAnalysis> analyses(bundles.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= bundles.size()) break;
            analyses[i] = pipeline::analyze_bundle(bundles[i], config);
        }
    };
    unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, bundles.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    auto reports = pipeline::aggregate_all(analyses, config);

    fs::create_directories(out_dir);
    for (const auto& rep : reports) {
        for (const auto& fmt_name : formats) {
            auto fmt = format_from_string(fmt_name);
            fs::path out = fs::path(out_dir) / (rep.hotspot_id + extension_for(fmt));
            atomic_write_file(out.string(), report::render(rep, fmt));
            std::cout << "wrote " << out.string() << "\n";
        }
    }
    return kExitOk;
}

int run_convert(const std::string& har_path, const std::string& out_dir,
                bundle::SessionMeta meta) {
    bundle::HarConversionReport conv;
    auto b = bundle::convert_har(require_file(har_path, "HAR"), meta, &conv);
    bundle::save_bundle(b, out_dir);
    std::cout << "converted " << conv.converted << "/" << conv.entries << " entries";
    if (conv.skipped) std::cout << " (" << conv.skipped << " skipped)";
    std::cout << " -> " << out_dir << "\n";
    for (const auto& reason : conv.skip_reasons) std::cerr << "skipped: " << reason << "\n";
    return kExitOk;
}

int run_domdiff(const std::string& baseline_path, const std::string& observed_path,
                const std::string& exclusions_path, const std::string& psl_path,
                const std::string& format, const std::string& out_path) {
    domdiff::NormalizeOptions options;
    if (!exclusions_path.empty()) {
        for (const auto& line : split(require_file(exclusions_path, "exclusions"), '\n')) {
            std::string sel = trim(line);
            if (sel.empty() || starts_with(sel, "#")) continue;
            options.exclusions.push_back(domdiff::Selector::parse(sel));
        }
    }
    std::optional<domains::SuffixRuleSet> rules;
    if (!psl_path.empty()) rules = domains::parse_psl(require_file(psl_path, "PSL")).rules;

    auto baseline = domdiff::normalize(domdiff::parse_html(read_file(baseline_path)), options);
    auto observed = domdiff::normalize(domdiff::parse_html(read_file(observed_path)), options);
    auto report = domdiff::diff(baseline, observed, rules ? &*rules : nullptr);

    std::string rendered =
        format == "json" ? domdiff::render_json(report) : domdiff::render_text(report);
    if (out_path.empty())
        std::cout << rendered;
    else
        atomic_write_file(out_path, rendered);
    return kExitOk;
}

int run_compare(const std::string& default_dir, const std::string& protected_dir,
                InputPaths& paths, const std::string& out_path) {
    auto config = load_config(paths);
    auto b_default = bundle::load_bundle(default_dir);
    auto b_protected = bundle::load_bundle(protected_dir);
    auto a_default = pipeline::analyze_bundle(b_default, config);
    auto a_protected = pipeline::analyze_bundle(b_protected, config);
    auto diff = report::anti_tracking_diff(a_default, a_protected, config.filter_set);

    nlohmann::json j;
    j["hotspot_id"] = b_default.meta.hotspot_id;
    j["protected_mode"] = bundle::to_string(b_protected.meta.browsing_mode);
    j["unblocked_count"] = diff.unblocked_domains.size();
    j["unblocked_domains"] = diff.unblocked_domains;
    std::string rendered = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << rendered;
    else
        atomic_write_file(out_path, rendered);
    return kExitOk;
}

int run_report(const std::string& in_path, const std::string& format,
               const std::string& out_path) {
    auto rep = report::report_from_json(require_file(in_path, "report"));
    std::string rendered = report::render(rep, format_from_string(format));
    if (out_path.empty())
        std::cout << rendered;
    else
        atomic_write_file(out_path, rendered);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cpaudit - offline captive-portal traffic auditing toolkit"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "analyze capture bundles and write hotspot reports");
    std::vector<std::string> bundle_dirs;
    InputPaths analyze_paths;
    std::string consent_at, out_dir = "reports";
    std::vector<std::string> formats{"json"};
    unsigned jobs = std::thread::hardware_concurrency();
    analyze->add_option("bundles", bundle_dirs, "bundle directories")->required();
    analyze->add_option("--filters", analyze_paths.filters, "filter list as label=path (repeatable)");
    analyze->add_option("--psl", analyze_paths.psl, "public suffix list file");
    analyze->add_option("--owners", analyze_paths.owners, "ownership db json");
    analyze->add_option("--catalog", analyze_paths.catalog, "fingerprinting API catalog json");
    analyze->add_option("--pii", analyze_paths.pii, "PII profile json");
    analyze->add_option("--consent-at", consent_at, "consent instant (ISO-8601 UTC)");
    analyze->add_option("--out", out_dir, "output directory");
    analyze->add_option("--format", formats, "output formats: json, csv, text");
    analyze->add_option("--jobs", jobs, "parallel bundle workers");

    // convert
    auto* convert = app.add_subcommand("convert", "convert a HAR file into a capture bundle");
    std::string har_path, convert_out, hotspot_id, page_type = "captive_portal";
    std::string platform = "desktop", browser, mode = "default", collected_at, convert_consent;
    std::vector<std::string> owner_domains;
    convert->add_option("--har", har_path, "HAR 1.2 input file")->required();
    convert->add_option("--out", convert_out, "bundle output directory")->required();
    convert->add_option("--hotspot-id", hotspot_id, "hotspot identifier")->required();
    convert->add_option("--page-type", page_type, "captive_portal or landing_page");
    convert->add_option("--platform", platform, "desktop or android");
    convert->add_option("--browser", browser, "browser label");
    convert->add_option("--mode", mode, "default, private, adblock, privacy_badger");
    convert->add_option("--collected-at", collected_at, "collection instant (ISO-8601 UTC)")->required();
    convert->add_option("--consent-at", convert_consent, "consent instant (ISO-8601 UTC)");
    convert->add_option("--owner", owner_domains, "hotspot owner registrable domain (repeatable)");

    // domdiff
    auto* dd = app.add_subcommand("domdiff", "diff baseline vs observed honeysite pages");
    std::string baseline_path, observed_path, exclusions_path, dd_psl, dd_format = "text", dd_out;
    dd->add_option("--baseline", baseline_path, "baseline HTML file")->required();
    dd->add_option("--observed", observed_path, "observed HTML file")->required();
    dd->add_option("--exclusions", exclusions_path, "selector exclusions file (one per line)");
    dd->add_option("--psl", dd_psl, "public suffix list (for cross-domain severity)");
    dd->add_option("--format", dd_format, "text or json");
    dd->add_option("--out", dd_out, "output file (default stdout)");

    // compare
    auto* compare = app.add_subcommand("compare", "anti-tracking diff of default vs protected bundles");
    std::string default_dir, protected_dir, compare_out;
    InputPaths compare_paths;
    compare->add_option("--default", default_dir, "default-mode bundle directory")->required();
    compare->add_option("--protected", protected_dir, "protected-mode bundle directory")->required();
    compare->add_option("--filters", compare_paths.filters, "filter list as label=path (repeatable)");
    compare->add_option("--psl", compare_paths.psl, "public suffix list file");
    compare->add_option("--owners", compare_paths.owners, "ownership db json");
    compare->add_option("--catalog", compare_paths.catalog, "fingerprinting API catalog json");
    compare->add_option("--pii", compare_paths.pii, "PII profile json");
    compare->add_option("--out", compare_out, "output file (default stdout)");

    // report
    auto* rerender = app.add_subcommand("report", "re-render a saved report json");
    std::string report_in, report_format = "text", report_out;
    rerender->add_option("--in", report_in, "report json file")->required();
    rerender->add_option("--format", report_format, "json, csv, or text");
    rerender->add_option("--out", report_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*analyze) return run_analyze(bundle_dirs, analyze_paths, consent_at, out_dir, formats, jobs);
        if (*convert) {
            bundle::SessionMeta meta;
            meta.hotspot_id = hotspot_id;
            meta.page_type = bundle::page_type_from_string(page_type);
            meta.platform = bundle::platform_from_string(platform);
            meta.browser_label = browser;
            meta.browsing_mode = bundle::browsing_mode_from_string(mode);
            auto collected = parse_iso8601(collected_at);
            if (!collected) throw std::runtime_error("bad --collected-at timestamp");
            meta.collected_at = *collected;
            if (!convert_consent.empty()) {
                auto ts = parse_iso8601(convert_consent);
                if (!ts) throw std::runtime_error("bad --consent-at timestamp");
                meta.consent_at = *ts;
            }
            meta.owner_domains = owner_domains;
            return run_convert(har_path, convert_out, std::move(meta));
        }
        if (*dd) return run_domdiff(baseline_path, observed_path, exclusions_path, dd_psl, dd_format, dd_out);
        if (*compare) return run_compare(default_dir, protected_dir, compare_paths, compare_out);
        if (*rerender) return run_report(report_in, report_format, report_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}
