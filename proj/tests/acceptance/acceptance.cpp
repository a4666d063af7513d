// Acceptance checklist: one PASS/FAIL line per criterion. Criteria 1-9 run
// in-process through run_verify; criterion 10 reruns the checklist through
// the bdre_lab executable and compares the two CSV files byte for byte.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "bdre/io.hpp"
#include "bdre/verify.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void print_line(bool ok, const std::string& label, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << label;
    if (!detail.empty()) std::cout << "  " << detail;
    std::cout << std::endl;
}

}  // namespace

int main() {
    const bdre::ExperimentConfig defaults;
    const std::uint64_t seed = defaults.seed;
    const auto preset = bdre::VerifyPreset::standard();
    const fs::path work = fs::temp_directory_path() / "bdre_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    bool all = true;
    const auto report = bdre::run_verify(preset, seed, 0, {}, [&](const bdre::CriterionOutcome& c) {
        std::ostringstream detail;
        detail << "(" << c.seconds << " s, limit " << c.time_limit << " s)";
        for (const auto& n : c.notes) detail << "; " << n;
        print_line(c.passed(), "criterion " + std::to_string(c.id) + ": " + c.title, detail.str());
        all = all && c.passed();
    });

    const fs::path in_process = bdre::write_results(work / "in_process", "verify", report.records,
                                                    bdre::OutputFormat::Csv);

    const fs::path cli_dir = work / "cli";
    const std::string cmd = std::string("\"") + BDRE_LAB_EXE + "\" verify --preset standard --seed " +
                            std::to_string(seed) + " --output-dir \"" + cli_dir.string() +
                            "\" > \"" + (work / "cli_stdout.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    const fs::path cli_csv = cli_dir / "verify.csv";
    const bool have_csv = fs::exists(cli_csv);
    const bool identical = have_csv && slurp(cli_csv) == slurp(in_process);
    std::ostringstream detail;
    detail << "(cli exit status " << status << ", "
           << (have_csv ? std::to_string(fs::file_size(cli_csv)) + " bytes" : std::string("no csv"))
           << ")";
    print_line(identical, "criterion 10: reproducible verify CSV", detail.str());
    all = all && identical;

    std::cout << (all ? "all criteria passed" : "some criteria failed") << std::endl;
    return all ? 0 : 1;
}
