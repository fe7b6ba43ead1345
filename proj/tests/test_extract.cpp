#include "oracles.hpp"

#include "semcur/extract.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace semcur;

namespace
{
    const ExtractConfig &cfg()
    {
        static const auto c = ExtractConfig::with_default_stopwords();
        return c;
    }

    std::vector<std::string> keys_of(const std::vector<Subject> &subjects)
    {
        std::vector<std::string> out;
        for (const auto &s : subjects)
            out.push_back(s.key);
        return out;
    }

    const Subject *find(const std::vector<Subject> &subjects, const std::string &key)
    {
        for (const auto &s : subjects)
            if (s.key == key)
                return &s;
        return nullptr;
    }

    const std::vector<std::string> content_words{"solar", "wind",   "carbon", "tax",     "budget", "river",
                                                 "bridge", "school", "roof",   "battery", "garden", "tram",
                                                 "depot",  "market", "museum", "parking", "ticket", "harbour"};
    const std::vector<std::string> stop_words{"and", "the", "of", "with", "for", "we", "could", "in"};
}

TEST_SUITE("extract")
{
    TEST_CASE("normalize examples")
    {
        CHECK(normalize("Public Transport ") == "public transport");
        CHECK(normalize("CO2.") == "co2");
        CHECK(normalize("  Vegan   Party") == "vegan party");
        CHECK(normalize("") == "");
        CHECK(normalize("Really?!") == "really");
    }

    TEST_CASE("normalize is idempotent")
    {
        std::mt19937_64 rng(3);
        const std::string alphabet = "aBc  D.,!?;:\txY'-";
        for (int i = 0; i < 3000; ++i)
        {
            std::string s;
            const int n = std::uniform_int_distribution<int>(0, 20)(rng);
            for (int k = 0; k < n; ++k)
                s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
            const auto once = normalize(s);
            CHECK(normalize(once) == once);
        }
    }

    TEST_CASE("all-stopword utterance yields nothing")
    {
        CHECK(extract_subjects("and the of", cfg()).empty());
        CHECK(extract_subjects("", cfg()).empty());
        CHECK(extract_subjects("... ,,, !!", cfg()).empty());
    }

    TEST_CASE("carbon tax sentence")
    {
        const auto s = extract_subjects("We could tax carbon emissions and invest in public transport", cfg());
        CHECK(keys_of(s) == std::vector<std::string>{"tax carbon emissions", "public transport", "invest"});
        // hand scores: 3 words of degree 3 -> 9, then 2 + 2 = 4, then 1
        const auto ref = oracle::rake("we could tax carbon emissions and invest in public transport", cfg().stopwords);
        REQUIRE(ref.size() == 3);
        CHECK(ref[0].text == "tax carbon emissions");
        CHECK(ref[0].score == 9.0);
        CHECK(s[0].token_count == 3);
        CHECK(s[0].kind == SubjectKind::keyphrase);
    }

    TEST_CASE("entities: names not at sentence start and weekdays")
    {
        const auto s = extract_subjects("Let's meet Anna on Friday", cfg());
        const auto *anna = find(s, "anna");
        const auto *friday = find(s, "friday");
        REQUIRE(anna);
        REQUIRE(friday);
        CHECK(anna->kind == SubjectKind::entity);
        CHECK(anna->text == "Anna");
        CHECK(friday->kind == SubjectKind::entity);
        CHECK(friday->text == "Friday");
        CHECK_FALSE(find(s, "let's"));
    }

    TEST_CASE("capitalised first word of a sentence is not a name")
    {
        const auto s = extract_subjects("Solar power is cheap. Wind power too", cfg());
        for (const auto &x : s)
            CHECK(x.kind == SubjectKind::keyphrase);
        CHECK(find(s, "solar power"));
    }

    TEST_CASE("date and clock patterns")
    {
        auto kinds = [](const std::string &text) {
            std::map<std::string, SubjectKind> m;
            for (const auto &s : extract_subjects(text, cfg()))
                m[s.key] = s.kind;
            return m;
        };
        CHECK(kinds("the budget deadline is 12 March")["12 march"] == SubjectKind::entity);
        CHECK(kinds("report due March 3rd")["march 3rd"] == SubjectKind::entity);
        CHECK(kinds("call the council at 10:30")["10:30"] == SubjectKind::entity);
        CHECK(kinds("meet at 3 pm near the station")["3 pm"] == SubjectKind::entity);
        CHECK(kinds("launch on 2024-05-01 downtown")["2024-05-01"] == SubjectKind::entity);
        CHECK(kinds("starts 9am sharp")["9am"] == SubjectKind::entity);
    }

    TEST_CASE("multi-word names form one entity")
    {
        const auto s = extract_subjects("we asked Green Party members", cfg());
        const auto *gp = find(s, "green party");
        REQUIRE(gp);
        CHECK(gp->kind == SubjectKind::entity);
    }

    TEST_CASE("numerals split candidates")
    {
        const auto s = extract_subjects("plant 500 trees", cfg());
        CHECK(find(s, "plant"));
        CHECK(find(s, "trees"));
        CHECK_FALSE(find(s, "500"));
    }

    TEST_CASE("long runs are truncated to max_phrase_tokens")
    {
        auto c = cfg();
        c.max_phrase_tokens = 2;
        const auto s = extract_subjects("solar roof battery garden", c);
        REQUIRE(s.size() == 1);
        CHECK(s[0].key == "solar roof");
    }

    TEST_CASE("max_subjects truncation keeps the best scores")
    {
        auto c = cfg();
        c.max_subjects_per_utterance = 1;
        const auto s = extract_subjects("We could tax carbon emissions and invest in public transport", c);
        REQUIRE(s.size() == 1);
        CHECK(s[0].key == "tax carbon emissions");
        c.max_subjects_per_utterance = 0;
        CHECK_THROWS(extract_subjects("x", c));
    }

    TEST_CASE("duplicates within an utterance collapse on key")
    {
        const auto s = extract_subjects("Solar power, solar power and SOLAR POWER", cfg());
        CHECK(s.size() == 1);
    }

    TEST_CASE("ties keep first occurrence order")
    {
        const auto s = extract_subjects("tram and museum and garden", cfg());
        CHECK(keys_of(s) == std::vector<std::string>{"tram", "museum", "garden"});
    }

    TEST_CASE("make_subject derives key and token count")
    {
        const auto s = make_subject("  Public   Transport. ", SubjectKind::entity);
        CHECK(s.text == "Public Transport.");
        CHECK(s.key == "public transport");
        CHECK(s.token_count == 2);
        CHECK(to_string(SubjectKind::entity) == "entity");
        CHECK(subject_kind_from_string("keyphrase") == SubjectKind::keyphrase);
        CHECK_THROWS(subject_kind_from_string("noun"));
    }

    TEST_CASE("stopword files")
    {
        std::istringstream in("# header\nThe\n  and \n\nof\n");
        const auto w = read_stopwords(in);
        CHECK(w == std::set<std::string>{"the", "and", "of"});
        const auto bundled = default_stopwords();
        CHECK(bundled.count("the"));
        CHECK(bundled == load_stopwords(std::string(SEMCUR_DATA_DIR) + "/stopwords_en.txt"));
    }

    TEST_CASE("keyphrases agree with a hand degree/frequency scorer")
    {
        for (const auto &w : content_words)
            REQUIRE_FALSE(cfg().stopwords.count(w));
        for (const auto &w : stop_words)
            REQUIRE(cfg().stopwords.count(w));

        std::mt19937_64 rng(19);
        auto pick = [&](const std::vector<std::string> &v) {
            return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
        };
        for (int iter = 0; iter < 1500; ++iter)
        {
            std::string sentence;
            const int groups = std::uniform_int_distribution<int>(1, 6)(rng);
            for (int g = 0; g < groups; ++g)
            {
                const int run = std::uniform_int_distribution<int>(1, 4)(rng);
                for (int k = 0; k < run; ++k)
                    sentence += pick(content_words) + " ";
                const int sep = std::uniform_int_distribution<int>(0, 3)(rng);
                if (sep == 0)
                    sentence += ", ";
                else
                    sentence += pick(stop_words) + " ";
            }
            auto ref = oracle::rake(sentence, cfg().stopwords);
            std::stable_sort(ref.begin(), ref.end(), [](const auto &a, const auto &b) { return a.score > b.score; });
            if (ref.size() > 6)
                ref.resize(6);

            const auto got = extract_subjects(sentence, cfg());
            REQUIRE(got.size() == ref.size());
            for (std::size_t i = 0; i < ref.size(); ++i)
            {
                INFO(sentence);
                CHECK(got[i].key == ref[i].text);
            }
        }
    }

    TEST_CASE("subject invariants over mixed random text")
    {
        const std::vector<std::string> vocab{"Anna", "met",   "the",   "Council", "on",    "Friday", "at",
                                             "10:30", "12",   "March", "solar",   "power", "and",    "we",
                                             "could", "tax.", "Green", "Party",   "said",  "2025-01-02", "bus,",
                                             "lanes", "CO2",  "in",    "Oslo",    "!",     "3pm",    "x-ray"};
        std::mt19937_64 rng(23);
        for (int iter = 0; iter < 3000; ++iter)
        {
            std::string text;
            const int n = std::uniform_int_distribution<int>(0, 25)(rng);
            for (int k = 0; k < n; ++k)
                text += vocab[std::uniform_int_distribution<std::size_t>(0, vocab.size() - 1)(rng)] + " ";
            const auto s = extract_subjects(text, cfg());
            CHECK(s == extract_subjects(text, cfg()));
            CHECK(s.size() <= 6);
            std::set<std::string> keys;
            for (const auto &x : s)
            {
                CHECK(x.key == normalize(x.text));
                CHECK(x.token_count == static_cast<int>(whitespace_tokens(x.text).size()));
                CHECK(x.token_count >= 1);
                CHECK(x.token_count <= 5);
                CHECK_FALSE(cfg().stopwords.count(x.key));
                CHECK(keys.insert(x.key).second);
            }
        }
    }
}
