// Walks one population through both voting schemes: the code-sheet scheme
// under a shared-k attack, then the blind-signature scheme honestly and with
// an authority that signs ballots nobody requested.
//
//   demo_election [key-bits] [board-dir]

#include <bpv/bpv.hpp>

#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace bpv;

namespace {

ElectionConfig demo_config() {
  return ElectionConfig::make({0x44, 0x45, 0x4d, 0x4f, 0x00, 0x00, 0x00, 0x01}, "Demo municipal election",
                              {{"Harbour Party", {"Ines", "Jonas", "Karla", "Lutz"}},
                               {"Valley Union", {"Mara", "Nils", "Olga"}},
                               {"Independent List", {"Piet"}}});
}

void print_counts(const ElectionConfig& config, const VoteCounts& counts) {
  for (std::size_t p = 0; p < config.parties().size(); ++p) {
    std::cout << "    " << config.party(p).name << ": " << counts.party_votes[p] << " ballots; approvals";
    for (std::size_t c = 0; c < config.party(p).candidates.size(); ++c)
      std::cout << " " << config.party(p).candidates[c] << "=" << counts.candidate_for[p][c];
    std::cout << "\n";
  }
}

void print_outcome(const std::string& title, const ElectionConfig& config, const ElectionOutcome& out,
                   const Board& board) {
  std::cout << title << "\n";
  std::cout << "  ballots mailed     " << out.box.size() << "\n";
  std::cout << "  ballots accepted   " << out.tally.accepted << "\n";
  std::cout << "  matches mailed     " << (out.tally.counts == out.ground_truth ? "yes" : "no") << "\n";
  std::cout << "  signing requests   " << out.audit.requests_valid << "\n";
  std::cout << "  discrepancy        " << out.audit.discrepancy << "\n";
  std::cout << "  cheat flag         " << (out.audit.cheat_flag ? "RAISED" : "clear") << "\n";
  const BoardVerdict v = board.verify();
  std::cout << "  board              " << (v.ok() ? "intact" : "BROKEN") << ", " << board.records().size()
            << " records\n";
  print_counts(config, out.tally.counts);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const std::size_t bits = argc > 1 ? std::stoul(argv[1]) : 2048;
    const fs::path dir = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "bpv-demo";
    fs::create_directories(dir);
    for (const char* name : {"legacy_board.txt", "honest_board.txt", "corrupt_board.txt"}) fs::remove(dir / name);

    const ElectionConfig config = demo_config();
    const legacy::Scenario scenario{.honest = 190, .compromised = 10, .seed = 2024, .copy_error = 0.02};

    std::cout << "Population: " << scenario.honest + scenario.compromised << " voters, " << scenario.compromised
              << " of them on compromised devices\n\n";

    Board legacy_board((dir / "legacy_board.txt").string());
    const legacy::ScenarioReport legacy_report = legacy::attack_k_reuse(config, scenario, &legacy_board);
    std::cout << "Code-sheet scheme, compromised devices print one shared k\n";
    std::cout << "  counted            " << legacy_report.counted << "\n";
    std::cout << "  invalidated        " << legacy_report.invalidated << "\n";
    std::cout << "  passed own k check " << legacy_report.compromised_passed_check << "\n";
    std::cout << "  note sheet match   " << legacy_report.note_sheet_matches << " of "
              << legacy_report.note_sheet_matches + legacy_report.note_sheet_mismatches << "\n";
    std::cout << "  votes reconstructable from receipts " << legacy_report.receipts_reconstructed << " of "
              << legacy_report.receipts_attempted << "\n\n";

    Rng key_rng(7);
    std::cout << "Generating a " << bits << "-bit blind-signature key...\n\n";
    const BlindKeyPair key = keygen(bits, key_rng);

    ElectionPlan plan = plan_from_scenario(config, scenario);
    Board honest_board((dir / "honest_board.txt").string());
    Rng honest_rng(2024);
    const ElectionOutcome honest = run_blind_election(config, key, plan, honest_rng, &honest_board);
    print_outcome("Blind-signature scheme, same voters, honest authority", config, honest, honest_board);
    std::cout << "\n";

    plan.corrupt_signatures = 6;
    plan.lost_ballots = 2;
    Board corrupt_board((dir / "corrupt_board.txt").string());
    Rng corrupt_rng(2024);
    const ElectionOutcome corrupt = run_blind_election(config, key, plan, corrupt_rng, &corrupt_board);
    print_outcome("Blind-signature scheme, authority mints 6 extra ballots, 2 ballots lost in the post", config,
                  corrupt, corrupt_board);

    std::cout << "\nBoards written to " << dir.string() << "\n";
    const bool as_expected = legacy_report.invalidated == scenario.compromised && !honest.audit.cheat_flag &&
                             honest.tally.accepted == plan.voters.size() && corrupt.audit.cheat_flag;
    return as_expected ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "ERR " << to_string(e.code()) << " " << e.what() << "\n";
    return 1;
  }
}
