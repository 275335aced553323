"""Walk through preprocessing: message normalization, code-line
analysis, vocabularies, and the fixed-shape index tensors the model
consumes.

    python3 demos/02_preprocess_text_and_code.py
"""

import tempfile
from pathlib import Path

from patchnet import (
    FunctionNameTable,
    PatchDims,
    RawCommit,
    assemble_tensors,
    build_function_table,
    build_vocab,
    classify_line_kinds,
    message_tokens,
    porter_stem,
    read_tensor_file,
    strip_comments_strings,
    strip_tags,
    tokenize_code_line,
    write_tensor_file,
)
from patchnet.core import CodeLine, Label, LineKind
from patchnet.preprocess import code_token_stream, message_token_stream

MESSAGE = """net: fix a use-after-free in the ring teardown

The ring buffers are freed before the watchdog stops looking at them.
Stop the watchdog first.

Cc: stable@vger.kernel.org
Fixes: 1234567890ab ("net: add ring watchdog")
Signed-off-by: Demo Dev <dev@example.org>"""

C_SOURCE = """static int ring_start(struct ring *r)
{
\tint err;  /* set by the allocator */

\terr = ring_alloc(r, "rx");
\tif (err)
\t\tgoto fail;
\tr->running = 1;
\treturn 0;
fail:
\tring_free(r);
\treturn err;
}"""


def demo_message():
    print("== message preprocessing ==")
    for word in ("fixes", "freed", "buffers", "stopping", "relational"):
        print(f"  porter_stem({word!r}) = {porter_stem(word)!r}")
    print()
    print("tag lines dropped by strip_tags:")
    for line in MESSAGE.splitlines():
        if line and line not in strip_tags(MESSAGE):
            print(f"  {line}")
    tokens = message_tokens(strip_tags(MESSAGE))
    print(f"tokens ({len(tokens)}): {tokens}")
    print()


def demo_code():
    print("== code-line analysis ==")
    stripped = strip_comments_strings(C_SOURCE)
    kinds = classify_line_kinds(stripped)
    for number, line in enumerate(C_SOURCE.splitlines(), start=1):
        kind = kinds[number]
        marker = {
            LineKind.ERROR_CHECKING: "check",
            LineKind.ERROR_HANDLING: "handle",
        }.get(kind, "")
        print(f"  {number:2} {marker:7} {line}")
    print()

    # Function names are kept verbatim only when the corpus calls them
    # often enough; everything else collapses to IDENT.
    table = FunctionNameTable(retained=frozenset({"ring_alloc"}), defined_in={})
    line = CodeLine(line_number=6, text="\terr = ring_alloc(r, NULL);", sign="+",
                    kind=LineKind.NORMAL)
    tokens = [t.text for t in tokenize_code_line(line, table, "drivers/net/ring.c")]
    print(f"tokenized changed line: {tokens}")
    print()


def make_commit(n, subject, added_line, label, removed_line="\told = thing;"):
    diff = (
        "diff --git a/drivers/net/ring.c b/drivers/net/ring.c\n"
        "--- a/drivers/net/ring.c\n"
        "+++ b/drivers/net/ring.c\n"
        "@@ -10,2 +10,3 @@ void frob(void)\n"
        " \tint x;\n"
        f"-{removed_line}\n"
        f"+{added_line}\n"
        "+\tdone = 1;\n"
    )
    return RawCommit(
        commit_id=f"{n:x}".ljust(40, "0"),
        parent_ids=(f"{n + 50:x}".ljust(40, "0"),),
        author_name="Demo Dev",
        author_email="dev@example.org",
        date=1_500_000_000 + n,
        subject=subject,
        body="Keep the ring settings consistent.",
        diff_text=diff,
        label=label,
    )


def demo_tensors():
    print("== vocabularies and tensors ==")
    commits = [
        make_commit(1, "net: fix the ring leak", "\tring_free(r);", Label.STABLE),
        make_commit(2, "net: tune the ring depth", "\tdepth = 64;", Label.NON_STABLE,
                    removed_line="\tring_free(old);"),
        make_commit(3, "net: fix the ring leak again", "\tring_free(q);", Label.STABLE),
        make_commit(4, "net: rename the ring field", "\tdepth = 32;", Label.NON_STABLE,
                    removed_line="\tring_free(old);"),
        make_commit(5, "net: plug the ring leak", "\tring_free(p);", Label.STABLE),
    ]
    table = build_function_table(commits)
    print(f"retained function names (called enough to keep): {sorted(table.retained)}")

    msg_vocab = build_vocab(message_token_stream(commits), "message")
    code_vocab = build_vocab(code_token_stream(commits, table), "code")
    print(f"message vocabulary: {len(msg_vocab)} entries")
    print(f"code vocabulary:    {len(code_vocab)} entries")

    dims = PatchDims(msg_len=8, files=2, hunks=2, lines=3, words=8)
    patch = assemble_tensors(commits[0], table, (msg_vocab, code_vocab), dims)
    print(f"message tensor shape: {patch.message_tokens.shape}")
    print(f"code tensor shapes:   {patch.removed_code.shape} (removed and added)")
    decoded = [msg_vocab.index_to_word[i] for i in patch.message_tokens]
    print(f"decoded message row:  {decoded}")

    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "tensors.bin")
        patches = [
            assemble_tensors(c, table, (msg_vocab, code_vocab), dims)
            for c in commits
        ]
        write_tensor_file(path, patches, dims)
        loaded, loaded_dims = read_tensor_file(path)
        print(
            f"tensor file round trip: {len(loaded)} patches, dims {loaded_dims}, "
            f"labels {[p.label.value for p in loaded]}"
        )


def main():
    demo_message()
    demo_code()
    demo_tensors()


if __name__ == "__main__":
    main()
