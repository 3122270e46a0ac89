# Generated by Django 5.1.7 on 2026-10-16 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SimulationRunCounter',
            fields=[
                ('id', models.BigAutoField(primary_key=True, serialize=False)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('last_id', models.IntegerField(default=0)),
            ],
            options={
                'abstract': False,
            },
        ),
        migrations.CreateModel(
            name='SimulationRun',
            fields=[
                ('id', models.BigAutoField(primary_key=True, serialize=False)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('run_id', models.CharField(db_index=True, editable=False, max_length=20, unique=True)),
                ('scenario_name', models.CharField(max_length=200)),
                ('status', models.CharField(choices=[('running', 'running'), ('completed', 'completed'), ('aborted', 'aborted'), ('failed', 'failed')], db_index=True, default='running', max_length=20)),
                ('output_dir', models.CharField(max_length=500)),
                ('steps', models.IntegerField(default=0)),
                ('final_time', models.FloatField(blank=True, null=True)),
                ('error_category', models.CharField(blank=True, max_length=50, null=True)),
                ('error_message', models.TextField(blank=True, null=True)),
                ('manifest', models.JSONField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
    ]
