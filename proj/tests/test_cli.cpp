#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <regex>

#include <json.hpp>

#include "cli_runner.hpp"
#include "test_support.hpp"

using test_support::run_cli;

namespace fs = std::filesystem;

namespace {

const char* kTinyData = "--set n_points=16 --set n_frames_low=5 --set n_frames_high=10";

// Every file below dir, relative path -> contents.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = test_support::read_file(e.path());
    }
    return files;
}

// Long option names a subcommand's help documents.
std::set<std::string> documented_flags(const std::string& help) {
    std::set<std::string> flags;
    const std::regex re("--[a-z][a-z-]*");
    for (auto it = std::sregex_iterator(help.begin(), help.end(), re); it != std::sregex_iterator(); ++it) {
        flags.insert(it->str());
    }
    return flags;
}

}  // namespace

TEST_CASE("help lists every subcommand and documents every flag") {
    const auto top = run_cli("--help");
    CHECK(top.exit_code == 0);
    for (const char* sub : {"gen-data", "train", "eval", "interp", "report"}) CHECK(top.output.find(sub) != std::string::npos);

    const std::map<std::string, std::set<std::string>> expected{
        {"gen-data", {"--help", "--preset", "--config", "--set", "--print-config", "--out"}},
        {"train", {"--help", "--data", "--config", "--set", "--print-config", "--out"}},
        {"eval", {"--help", "--data", "--checkpoint", "--threads", "--config", "--set", "--print-config", "--out"}},
        {"interp", {"--help", "--data", "--checkpoint", "--config", "--set", "--print-config", "--out"}},
        {"report", {"--help", "--eval", "--out"}},
    };
    for (const auto& [sub, flags] : expected) {
        CAPTURE(sub);
        const auto r = run_cli(sub + " --help");
        CHECK(r.exit_code == 0);
        CHECK(documented_flags(r.output) == flags);
    }
}

TEST_CASE("help documents every setting key") {
    for (const char* sub : {"gen-data", "train", "eval", "interp"}) {
        CAPTURE(sub);
        const auto printed = run_cli(std::string(sub) + " --print-config");
        REQUIRE(printed.exit_code == 0);
        const auto help = run_cli(std::string(sub) + " --help").output;
        std::istringstream lines(printed.output);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.empty() || line[0] == '#') continue;
            const std::string key = line.substr(0, line.find(' '));
            CAPTURE(key);
            CHECK(std::regex_search(help, std::regex("\\n  " + key + " ")));
        }
    }
}

TEST_CASE("usage errors exit with 2") {
    const auto unknown = run_cli("frobnicate");
    CHECK(unknown.exit_code == 2);
    CHECK(unknown.output.find("Usage") != std::string::npos);
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("train --set nope=1 --print-config").exit_code == 2);
    CHECK(run_cli("train --set epochs=abc --print-config").exit_code == 2);
    CHECK(run_cli("gen-data --preset huge --print-config").exit_code == 2);
    CHECK(run_cli("gen-data --out /tmp/x --set dt_high=0.03").exit_code == 2);
}

TEST_CASE("missing or malformed input files exit with 3") {
    test_support::TempDir tmp("cli_io");
    CHECK(run_cli("train --data " + (tmp.path / "absent").string() + " --out " + (tmp.path / "o").string()).exit_code == 3);
    CHECK(run_cli("train --config " + (tmp.path / "absent.txt").string() + " --print-config").exit_code == 3);
    fs::create_directories(tmp.path / "bad");
    std::ofstream(tmp.path / "bad" / "manifest.json") << "{ not json";
    std::ofstream(tmp.path / "bad" / "data.bin") << "";
    const auto r = run_cli("train --data " + (tmp.path / "bad").string() + " --out " + (tmp.path / "o").string());
    CHECK(r.exit_code == 3);
    CHECK(std::count(r.output.begin(), r.output.end(), '\n') == 1);
}

TEST_CASE("print-config output reloads to the same settings") {
    test_support::TempDir tmp("cli_cfg");
    for (const char* sub : {"gen-data", "train", "eval", "interp"}) {
        CAPTURE(sub);
        const auto first = run_cli(std::string(sub) + " --set seed=11 --print-config");
        if (std::string(sub) == "eval" || std::string(sub) == "interp") {
            CHECK(first.exit_code == 2);  // no seed setting
            continue;
        }
        REQUIRE(first.exit_code == 0);
        const auto path = tmp.path / (std::string(sub) + ".txt");
        std::ofstream(path) << first.output;
        const auto second = run_cli(std::string(sub) + " --config " + path.string() + " --print-config");
        CHECK(second.exit_code == 0);
        CHECK(second.output == first.output);
        CHECK(first.output.find("seed = 11") != std::string::npos);
    }
    const auto ev = run_cli("eval --set split=val --print-config");
    CHECK(ev.output.find("split = val") != std::string::npos);
}

TEST_CASE("gen-data summary and idempotency") {
    test_support::TempDir tmp("cli_gen");
    const auto desk = run_cli("gen-data --out " + (tmp.path / "a").string() + " " + kTinyData);
    REQUIRE(desk.exit_code == 0);
    CHECK(desk.output.find("sequences: 8 (2 vessels × 4 resistances)") != std::string::npos);
    REQUIRE(run_cli("gen-data --out " + (tmp.path / "b").string() + " " + kTinyData).exit_code == 0);
    const auto a = snapshot(tmp.path / "a");
    CHECK(a.size() == 2);
    CHECK(a == snapshot(tmp.path / "b"));
    REQUIRE(run_cli("gen-data --out " + (tmp.path / "a").string() + " " + kTinyData).exit_code == 0);
    CHECK(a == snapshot(tmp.path / "a"));

    const auto full = run_cli("gen-data --preset full --print-config");
    CHECK(full.output.find("n_points = 8192") != std::string::npos);
    CHECK(full.output.find("n_vessels = 5") != std::string::npos);
    CHECK(full.output.find("n_frames_low = 250") != std::string::npos);
}

TEST_CASE("train, eval, interp and report end to end") {
    test_support::TempDir tmp("cli_pipeline");
    const auto data = (tmp.path / "data").string();
    REQUIRE(run_cli("gen-data --out " + data + " " + kTinyData).exit_code == 0);
    const std::string train_args = " --data " + data + " --set epochs=2 --set batch_size=8 --set seed=3";
    const auto tr = run_cli("train --out " + (tmp.path / "t1").string() + train_args);
    REQUIRE(tr.exit_code == 0);
    for (const char* f : {"final.ckpt", "best.ckpt", "train_log.csv", "config.txt", "split.json"}) {
        CHECK(fs::exists(tmp.path / "t1" / f));
    }
    REQUIRE(run_cli("train --out " + (tmp.path / "t2").string() + train_args).exit_code == 0);
    CHECK(snapshot(tmp.path / "t1") == snapshot(tmp.path / "t2"));

    const auto ckpt = (tmp.path / "t1" / "final.ckpt").string();
    for (const char* out : {"e1", "e2"}) {
        REQUIRE(run_cli("eval --data " + data + " --checkpoint " + ckpt + " --out " + (tmp.path / out).string()).exit_code == 0);
    }
    CHECK(run_cli("eval --threads 2 --data " + data + " --checkpoint " + ckpt + " --out " + (tmp.path / "e3").string())
              .exit_code == 0);
    const auto e1 = snapshot(tmp.path / "e1");
    CHECK(e1 == snapshot(tmp.path / "e2"));
    CHECK(e1 == snapshot(tmp.path / "e3"));

    REQUIRE(run_cli("eval --set stub=ground_truth --data " + data + " --out " + (tmp.path / "stub").string()).exit_code == 0);
    const auto summary = nlohmann::json::parse(test_support::read_file(tmp.path / "stub" / "summary.json"));
    CHECK(summary.at("re_network_percent").get<double>() == 0.0);
    for (const auto& s : summary.at("sequences")) CHECK(s.at("re_network_percent").get<double>() == 0.0);

    const auto rp = run_cli("report --eval full=" + (tmp.path / "e1").string() + " --eval stub=" +
                            (tmp.path / "stub").string() + " --out " + (tmp.path / "rep").string());
    CHECK(rp.exit_code == 0);
    CHECK(test_support::read_file(tmp.path / "rep" / "re_table.csv").rfind("Field,full,stub,Linear\n", 0) == 0);
    CHECK(fs::exists(tmp.path / "rep" / "re_table.md"));

    const auto ip = run_cli("interp --data " + data + " --checkpoint " + ckpt + " --out " + (tmp.path / "hi").string());
    REQUIRE(ip.exit_code == 0);
    CHECK(ip.output.find("frames: 9 (k=1)") != std::string::npos);
    CHECK(ip.output.find("interpolation wall clock") != std::string::npos);
    CHECK(fs::exists(tmp.path / "hi" / "manifest.json"));

    CHECK(run_cli("eval --data " + data + " --checkpoint " + (tmp.path / "t1" / "config.txt").string() + " --out " +
                  (tmp.path / "x").string())
              .exit_code == 3);
}

TEST_CASE("a dataset that cannot hold k interpolated frames is a config error") {
    test_support::TempDir tmp("cli_align");
    const auto data = (tmp.path / "data").string();
    REQUIRE(run_cli("gen-data --out " + data + " " + kTinyData).exit_code == 0);
    const auto r = run_cli("eval --set stub=ground_truth --set k=2 --data " + data + " --out " + (tmp.path / "e").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("frame alignment") != std::string::npos);
}
